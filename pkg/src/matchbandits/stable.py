"""Gale-Shapley deferred acceptance, stability checks and a brute-force oracle."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

from .core import AgentId, ArmId, Instance, Matching
from .errors import CapacityError

ENUMERATION_LIMIT = 8


@dataclass(frozen=True)
class BlockingPair:
    """A pair that strictly prefers each other over their partners in some matching."""

    agent: AgentId
    arm: ArmId


@dataclass(frozen=True)
class StableSet:
    """All stable matchings of an instance, with the extremal elements flagged."""

    matchings: tuple[Matching, ...]
    agent_optimal: Matching
    agent_pessimal: Matching


def deferred_acceptance(
    agent_prefs: Sequence[Sequence[ArmId]], instance: Instance
) -> Matching:
    """Agent-proposing deferred acceptance with explicit agent preference lists.

    Arms judge proposals with the instance's true preference lists. Every
    agent is matched (complete lists, N <= K). Takes at most N*K proposals.
    """
    n = instance.n_agents
    next_choice = [0] * (n + 1)  # next_choice[j]: index into agent j's list
    holder: dict[ArmId, AgentId] = {}
    free = list(range(n, 0, -1))
    proposals = 0
    while free:
        j = free.pop()
        k = agent_prefs[j - 1][next_choice[j]]
        proposals += 1
        if proposals > n * instance.n_arms:
            raise AssertionError("deferred acceptance exceeded N*K proposals")
        current = holder.get(k)
        if current is None:
            holder[k] = j
        elif instance.prefers(k, j, current):
            holder[k] = j
            next_choice[current] += 1
            free.append(current)
        else:
            next_choice[j] += 1
            free.append(j)
    return Matching(tuple((j, k) for k, j in holder.items()))


def gale_shapley(instance: Instance) -> Matching:
    """The agent-optimal stable matching (agent preferences derived from means)."""
    prefs = [instance.agent_pref(j) for j in instance.agents]
    return deferred_acceptance(prefs, instance)


def blocking_pairs(instance: Instance, matching: Matching) -> tuple[BlockingPair, ...]:
    """All pairs blocking ``matching``; empty iff the matching is stable.

    ``matching`` must match every agent. A pair (j, k) blocks when agent j
    prefers k over its assigned arm and arm k is either unmatched or prefers
    j over its current agent.
    """
    if matching.matched_agents != set(instance.agents):
        missing = set(instance.agents) - matching.matched_agents
        raise ValueError(f"matching leaves agents unmatched: {sorted(missing)}")
    out = []
    for j in instance.agents:
        own = instance.mean(j, matching.arm_of(j))
        for k in instance.arms:
            if instance.mean(j, k) <= own:
                continue
            current = matching.agent_of(k)
            if current is None or instance.prefers(k, j, current):
                out.append(BlockingPair(agent=j, arm=k))
    return tuple(out)


def enumerate_stable(instance: Instance) -> StableSet:
    """Exhaustively enumerate stable matchings (test oracle, N and K <= 8)."""
    n, k = instance.n_agents, instance.n_arms
    if n > ENUMERATION_LIMIT or k > ENUMERATION_LIMIT:
        raise CapacityError(
            f"enumeration limited to N, K <= {ENUMERATION_LIMIT}, got N={n} K={k}"
        )
    stable = []
    for arms in permutations(instance.arms, n):
        m = Matching(tuple(zip(instance.agents, arms)))
        if not blocking_pairs(instance, m):
            stable.append(m)
    if not stable:
        raise AssertionError("no stable matching found; enumeration is buggy")

    def dominates_all(cand: Matching, better) -> bool:
        return all(
            all(
                better(instance.mean(j, cand.arm_of(j)), instance.mean(j, other.arm_of(j)))
                for j in instance.agents
            )
            for other in stable
        )

    optimal = [m for m in stable if dominates_all(m, lambda a, b: a >= b)]
    pessimal = [m for m in stable if dominates_all(m, lambda a, b: a <= b)]
    if len(optimal) != 1 or len(pessimal) != 1:
        raise AssertionError("agent-optimal/pessimal element not unique")
    return StableSet(
        matchings=tuple(stable), agent_optimal=optimal[0], agent_pessimal=pessimal[0]
    )
