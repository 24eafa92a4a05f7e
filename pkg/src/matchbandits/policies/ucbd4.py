"""Phased UCB with global (communicated) and local (collision-count) deletion.

Each phase is a regular block of ``regular_len(i)`` rounds followed by a
communication block of N*K rounds. During the regular block the agent plays
the highest-UCB arm in its active set; arms it collides with at least
ceil(beta * regular_len(i)) times are deleted locally for the rest of the
phase. The communication block broadcasts the agent's most-matched arm: one
K-round scan slot per agent id, during which everyone else sits on their
broadcast arm, so a collision while scanning arm k means some agent ranked
above us is camped there. The scan result becomes the globally deleted set
for the next phase (recomputed every phase, not accumulated).

Disabling local deletion reproduces the earlier dominate-and-delete policy,
which deadlocks under heterogeneous arm preferences.
"""

from __future__ import annotations

import math

from ..env import Observation, Regime
from .base import PhaseSchedule, RankingProtocol, ucb_index


class UcbD4Policy:
    regime = Regime.FULL_DECENTRALIZED

    def __init__(
        self,
        n_agents: int,
        n_arms: int,
        gamma: float = 2.0,
        beta: float | None = None,
        local_deletion: bool = True,
        schedule: PhaseSchedule | None = None,
    ):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if beta is None:
            beta = 1.0 / (2 * n_arms)
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        self.n_agents = n_agents
        self.n_arms = n_arms
        self.gamma = gamma
        self.beta = beta
        self.local_deletion = local_deletion
        self.schedule = schedule or PhaseSchedule(n_agents, n_arms)
        self.ranking = RankingProtocol(n_agents)

        # cumulative match statistics (updated on every matched play)
        self.counts = [0] * n_arms
        self.sums = [0.0] * n_arms

        self.phase = 0
        self.globally_deleted: frozenset[int] = frozenset()
        self.locally_deleted: set[int] = set()
        self.active: list[int] = list(range(1, n_arms + 1))
        self.collisions = [0] * n_arms  # regular-block collision counters
        self.block_matches = [0] * n_arms
        self.most_matched: int = 1  # O_j[i], broadcast during communication
        self.anomalies = 0  # times the active set emptied and was reset

        self._mode = "ranking"
        self._remaining = self.schedule.ranking_len
        self._threshold = 0  # local-deletion threshold of the current phase
        self._deletion_frozen = False  # set after an active-set wipeout
        self._scan: set[int] = set()
        self._tau = 0  # position within the communication block, 1-based
        self._slot_lo = 0
        self._slot_hi = 0
        self._last_arm = 1

    @property
    def index(self) -> int:
        return self.ranking.index

    # -- block transitions -------------------------------------------------

    def _start_regular(self, i: int) -> None:
        self.phase = i
        length = self.schedule.regular_len(i)
        self._mode = "regular"
        self._remaining = length
        self._threshold = math.ceil(self.beta * length)
        self._deletion_frozen = False
        self.locally_deleted = set()
        self.active = [k for k in range(1, self.n_arms + 1) if k not in self.globally_deleted]
        self.collisions = [0] * self.n_arms
        self.block_matches = [0] * self.n_arms

    def _finish_regular(self) -> None:
        best, best_c = 0, 0
        for k, c in enumerate(self.block_matches, start=1):
            if c > best_c:
                best, best_c = k, c
        # no matches at all: fall back to the last round's played arm
        self.most_matched = best if best_c > 0 else self._last_arm
        idx = self.ranking.index
        self._mode = "comm"
        self._remaining = self.schedule.comm_len
        self._tau = 0
        self._scan = set()
        self._slot_lo = self.n_arms * (idx - 1)
        self._slot_hi = self.n_arms * idx - 1

    def _reset_active(self) -> None:
        """Local deletion emptied the active set: undo it and stop deleting
        for the remainder of the phase."""
        self.anomalies += 1
        self.locally_deleted = set()
        self.active = [k for k in range(1, self.n_arms + 1) if k not in self.globally_deleted]
        self._deletion_frozen = True

    # -- per-round interface -------------------------------------------------

    def act(self, t: int) -> int:
        if self._mode == "ranking":
            self._last_arm = self.ranking.act(t)
            return self._last_arm
        if self._mode == "regular":
            log_term = 2.0 * self.gamma * math.log(t)
            best, best_v = 0, -math.inf
            for k in self.active:
                n = self.counts[k - 1]
                if n == 0:
                    best = k
                    break
                v = self.sums[k - 1] / n + math.sqrt(log_term / n)
                if v > best_v:
                    best, best_v = k, v
            self._last_arm = best
            return best
        # communication block
        self._tau += 1
        tau = self._tau
        if tau <= self.n_agents * self.n_arms - 1 and self._slot_lo <= tau <= self._slot_hi:
            self._last_arm = (tau % self.n_arms) + 1  # scan
        else:
            self._last_arm = self.most_matched  # broadcast (and the idle padding round)
        return self._last_arm

    def update(self, t: int, obs: Observation) -> None:
        arm = self._last_arm
        if self._mode == "ranking":
            self.ranking.update(t, obs)
            if obs.matched:
                self.counts[arm - 1] += 1
                self.sums[arm - 1] += obs.reward
            self._remaining -= 1
            if self._remaining == 0:
                self._start_regular(1)
            return

        if self._mode == "regular":
            if obs.matched:
                self.counts[arm - 1] += 1
                self.sums[arm - 1] += obs.reward
                self.block_matches[arm - 1] += 1
            else:
                c = self.collisions[arm - 1] + 1
                self.collisions[arm - 1] = c
                if (
                    self.local_deletion
                    and not self._deletion_frozen
                    and c >= self._threshold
                    and arm in self.active
                ):
                    self.active.remove(arm)
                    self.locally_deleted.add(arm)
                    if not self.active:
                        self._reset_active()
            self._remaining -= 1
            if self._remaining == 0:
                self._finish_regular()
            return

        # communication block
        if obs.matched:
            self.counts[arm - 1] += 1
            self.sums[arm - 1] += obs.reward
        elif (
            self._tau <= self.n_agents * self.n_arms - 1
            and self._slot_lo <= self._tau <= self._slot_hi
        ):
            self._scan.add(arm)
        self._remaining -= 1
        if self._remaining == 0:
            self.globally_deleted = frozenset(self._scan)
            self._start_regular(self.phase + 1)

    def ucb(self, arm: int, t: int) -> float:
        n = self.counts[arm - 1]
        return ucb_index(self.sums[arm - 1] / n if n else 0.0, n, t, self.gamma)


class UcbD3Policy(UcbD4Policy):
    """The same phased protocol without local deletion."""

    def __init__(
        self,
        n_agents: int,
        n_arms: int,
        gamma: float = 2.0,
        schedule: PhaseSchedule | None = None,
    ):
        super().__init__(
            n_agents,
            n_arms,
            gamma=gamma,
            beta=1.0 / (2 * n_arms),
            local_deletion=False,
            schedule=schedule,
        )
