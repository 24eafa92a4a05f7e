"""Comparison baselines: collision-avoidance UCB (partial information) and
centralized UCB (preference lists submitted to an arbiter each round)."""

from __future__ import annotations

import math

import numpy as np

from ..core import Instance, Matching
from ..env import Observation, Regime, sample_rewards
from ..errors import ConfigError
from ..stable import deferred_acceptance
from .base import ucb_index


class CaUcbPolicy:
    """Collision-avoidance UCB under partial information.

    Requires the full round matching in its observations and knowledge of the
    arm preference lists. Each round the plausible set holds the arms that
    were free last round, were matched to this agent, or prefer this agent
    over their last partner; with probability ``lam`` the agent repeats its
    previous attempt, otherwise it plays the highest-UCB plausible arm.
    """

    regime = Regime.PARTIAL

    def __init__(
        self,
        agent: int,
        instance: Instance,
        gamma: float = 2.0,
        lam: float = 0.2,
        rng: np.random.Generator | None = None,
    ):
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        self.agent = agent
        self.instance = instance
        self.n_arms = instance.n_arms
        self.gamma = gamma
        self.lam = lam
        self.rng = rng if rng is not None else np.random.default_rng()
        self.counts = [0] * self.n_arms
        self.sums = [0.0] * self.n_arms
        self._prev_attempt: int | None = None
        self._prev_matching: Matching | None = None

    def _ucb_argmax(self, t: int, arms) -> int:
        log_term = 2.0 * self.gamma * math.log(t) if t > 1 else 0.0
        best, best_v = 0, -math.inf
        for k in arms:
            n = self.counts[k - 1]
            if n == 0:
                return k
            v = self.sums[k - 1] / n + math.sqrt(log_term / n)
            if v > best_v:
                best, best_v = k, v
        return best

    def plausible_set(self) -> list[int]:
        prev = self._prev_matching
        me = self.agent
        out = []
        for k in range(1, self.n_arms + 1):
            holder = prev.agent_of(k)
            if holder is None or holder == me or self.instance.prefers(k, me, holder):
                out.append(k)
        return out

    def act(self, t: int) -> int:
        if self._prev_matching is None:
            arm = self._ucb_argmax(t, range(1, self.n_arms + 1))
        elif self.rng.random() < self.lam:
            arm = self._prev_attempt
        else:
            arm = self._ucb_argmax(t, self.plausible_set())
        self._prev_attempt = arm
        return arm

    def update(self, t: int, obs: Observation) -> None:
        if obs.full_matching is None:
            raise ConfigError(
                "collision-avoidance UCB needs partial-information feedback"
            )
        if obs.matched:
            arm = self._prev_attempt
            self.counts[arm - 1] += 1
            self.sums[arm - 1] += obs.reward
        self._prev_matching = obs.full_matching


class UcbCState:
    """Per-agent statistics for the centralized arbiter protocol."""

    regime = Regime.CENTRALIZED

    def __init__(self, n_arms: int, gamma: float = 2.0):
        self.n_arms = n_arms
        self.gamma = gamma
        self.counts = [0] * n_arms
        self.sums = [0.0] * n_arms

    def ranked_arms(self, t: int) -> tuple[int, ...]:
        """Arms by UCB index, best first; ties go to the smaller arm id."""
        idx = [
            ucb_index(self.sums[k] / self.counts[k] if self.counts[k] else 0.0,
                      self.counts[k], t, self.gamma)
            for k in range(self.n_arms)
        ]
        return tuple(sorted(range(1, self.n_arms + 1), key=lambda k: (-idx[k - 1], k)))

    def record(self, arm: int, reward: float) -> None:
        self.counts[arm - 1] += 1
        self.sums[arm - 1] += reward


def ucbc_round(
    states: dict[int, UcbCState],
    t: int,
    instance: Instance,
    rng: np.random.Generator,
) -> Matching:
    """One centralized round: collect UCB preference lists, assign the
    agent-optimal matching under them, sample rewards, update statistics.

    Every agent is matched (N <= K), so no collision ever occurs.
    """
    prefs = [states[j].ranked_arms(t) for j in instance.agents]
    matching = deferred_acceptance(prefs, instance)
    rewards = sample_rewards(instance, matching, rng)
    for j, k in matching.pairs:
        states[j].record(k, rewards[j])
    return matching
