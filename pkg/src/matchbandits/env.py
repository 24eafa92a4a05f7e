"""One-round market resolution, reward sampling, and feedback filtering."""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .core import AgentId, ArmId, Instance, Matching

# Every agent plays exactly one arm each round.
PlayProfile = dict[AgentId, ArmId]


class Regime(enum.Enum):
    """What an agent observes each round."""

    FULL_DECENTRALIZED = "full-decentralized"  # own (matched, reward) only
    PARTIAL = "partial"  # plus the full matching; arm preferences known
    CENTRALIZED = "centralized"  # preference lists submitted to an arbiter


class RoundOutcome(NamedTuple):
    matching: Matching
    blocked: frozenset[AgentId]
    rewards: dict[AgentId, float]  # matched agents only


class Observation(NamedTuple):
    matched: bool
    reward: float | None
    full_matching: Matching | None  # partial regime only
    arm_prefs_known: bool


def resolve_blocked(instance: Instance, plays: PlayProfile) -> frozenset[AgentId]:
    """Just the blocked side of the round resolution (hot-loop form)."""
    proposers: dict[ArmId, list[AgentId]] = {}
    for j, k in plays.items():
        if not 1 <= k <= instance.n_arms:
            raise ValueError(f"agent {j} played out-of-range arm {k}")
        proposers.setdefault(k, []).append(j)
    blocked: list[AgentId] = []
    for k, js in proposers.items():
        if len(js) > 1:
            rank = instance._arm_rank[k - 1]
            winner = min(js, key=lambda j: rank[j - 1])
            blocked.extend(j for j in js if j != winner)
    return frozenset(blocked)


def resolve_round(
    instance: Instance, plays: PlayProfile
) -> tuple[Matching, frozenset[AgentId]]:
    """Each arm matches its most preferred proposer; the rest are blocked."""
    blocked = resolve_blocked(instance, plays)
    pairs = tuple((j, k) for j, k in plays.items() if j not in blocked)
    return Matching(pairs), blocked


def sample_rewards(
    instance: Instance, matching: Matching, rng: np.random.Generator
) -> dict[AgentId, float]:
    """Two-point {0,1} rewards with success probability mu_jk, matched agents only.

    Draws are consumed in agent-id order so trajectories are reproducible.
    """
    rewards = {}
    for j, k in matching.pairs:
        rewards[j] = 1.0 if rng.random() < instance.means[j - 1, k - 1] else 0.0
    return rewards


def play_round(
    instance: Instance, plays: PlayProfile, rng: np.random.Generator
) -> RoundOutcome:
    matching, blocked = resolve_round(instance, plays)
    return RoundOutcome(matching, blocked, sample_rewards(instance, matching, rng))


def make_observations(
    outcome: RoundOutcome, regime: Regime, agents: range
) -> dict[AgentId, Observation]:
    """Filter the round outcome down to what each agent is allowed to see."""
    if regime is Regime.CENTRALIZED:
        raise ValueError("centralized rounds are resolved by the arbiter, not observed")
    partial = regime is Regime.PARTIAL
    full = outcome.matching if partial else None
    obs = {}
    for j in agents:
        matched = outcome.matching.arm_of(j) is not None
        obs[j] = Observation(
            matched=matched,
            reward=outcome.rewards.get(j),
            full_matching=full,
            arm_prefs_known=partial,
        )
    return obs
