"""Phased explore-then-commit.

After the ranking block the policy follows a phase clock over the global
round number: phase i spans rounds (P_i, P_{i+1}] with P_i = 1 + sum of
earlier phase lengths (so the default lengths 2^i give the usual power-of-two
phases). The first K*floor(i^eps) - 1 rounds of a phase explore in a rotation
offset by the agent's estimated id, which keeps exploration collision-free;
the rest of the phase runs a decentralized deferred acceptance where each
agent proposes to its best arm by exploration-only empirical means and
rejects any arm it gets blocked on until the phase ends.
"""

from __future__ import annotations

import math
from typing import Sequence

from ..env import Observation, Regime
from ..errors import ProtocolViolationError
from .base import PhaseSchedule, RankingProtocol


class RejectionDance:
    """One exploit block of decentralized deferred acceptance.

    Propose to the highest-value arm outside the rejected set; a block
    rejects that arm for the rest of the dance. With frozen values this
    reaches a block-free fixed point (the agent-proposing stable matching
    under those values).
    """

    def __init__(self, values: Sequence[float]):
        self.values = tuple(values)
        self.rejected: set[int] = set()

    def act(self) -> int:
        best, best_v = 0, -math.inf
        for k, v in enumerate(self.values, start=1):
            if k not in self.rejected and v > best_v:
                best, best_v = k, v
        if best == 0:
            raise AssertionError("every arm rejected; the dance cannot propose")
        return best

    def on_block(self, arm: int) -> None:
        self.rejected.add(arm)


class EtcPolicy:
    """Phased ETC agent. ``epsilon`` sets the exploration budget per phase."""

    regime = Regime.FULL_DECENTRALIZED

    def __init__(
        self,
        n_agents: int,
        n_arms: int,
        epsilon: float = 0.2,
        schedule: PhaseSchedule | None = None,
    ):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.n_agents = n_agents
        self.n_arms = n_arms
        self.epsilon = epsilon
        self.schedule = schedule or PhaseSchedule(n_agents, n_arms)
        self.ranking = RankingProtocol(n_agents)
        self.sums = [0.0] * n_arms
        self.counts = [0] * n_arms
        self.dance: RejectionDance | None = None
        self._dance_phase = -1
        self._phase = 0
        self._phase_start = 1  # P_i of the current phase
        self._phase_next = 1 + self.schedule.etc_phase_len(0)
        self._last: tuple[str, int] | None = None  # (mode, arm) of the pending round

    @property
    def index(self) -> int:
        return self.ranking.index

    def explore_means(self) -> list[float]:
        return [s / c if c else 0.0 for s, c in zip(self.sums, self.counts)]

    def act(self, t: int) -> int:
        if t <= self.n_agents:
            arm = self.ranking.act(t)
            self._last = ("ranking", arm)
            return arm
        while t > self._phase_next:
            self._phase += 1
            self._phase_start = self._phase_next
            self._phase_next += self.schedule.etc_phase_len(self._phase)
        explore_budget = self.n_arms * math.floor(self._phase**self.epsilon)
        if t - self._phase_start + 1 <= explore_budget:
            r = (t + self.ranking.index - self._phase_start + 1) % self.n_arms
            arm = r if r >= 1 else self.n_arms
            self._last = ("explore", arm)
            return arm
        if self._dance_phase != self._phase:
            # first exploit round of the phase: fresh rejections, frozen means
            self.dance = RejectionDance(self.explore_means())
            self._dance_phase = self._phase
        arm = self.dance.act()
        self._last = ("exploit", arm)
        return arm

    def update(self, t: int, obs: Observation) -> None:
        mode, arm = self._last
        if mode == "ranking":
            self.ranking.update(t, obs)
        elif mode == "explore":
            if not obs.matched:
                raise ProtocolViolationError(
                    f"collision on arm {arm} during exploration round {t}"
                )
            self.sums[arm - 1] += obs.reward
            self.counts[arm - 1] += 1
        elif not obs.matched:
            self.dance.on_block(arm)
