"""Checkers for serial dictatorship, SPC, the alpha-condition, and a
brute-force uniqueness-consistency oracle.

Each checker either returns order certificates (greedy elimination with
smallest-index tie-breaking) or None. A returned certificate is always
re-verified against the defining displayed condition before being handed
out; a replay failure is a bug, not a negative answer.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import (
    AgentId,
    ArmId,
    Instance,
    InstanceStructure,
    Matching,
    instance_structure,
)
from .errors import CapacityError
from .stable import enumerate_stable, gale_shapley

UNQC_LIMIT = 6


@dataclass(frozen=True)
class OrderCertificate:
    """An agent/arm ordering witnessing one of the structural conditions."""

    agent_order: tuple[AgentId, ...]
    arm_order: tuple[ArmId, ...]
    kind: str  # serial-dictatorship | spc | alpha-left | alpha-right

    @property
    def orders(self) -> tuple[tuple[AgentId, ...], tuple[ArmId, ...]]:
        return (self.agent_order, self.arm_order)


def check_serial_dictatorship(instance: Instance) -> OrderCertificate | None:
    """Certificate iff every arm has the same preference list over agents."""
    common = instance.arm_prefs[0]
    if any(p != common for p in instance.arm_prefs[1:]):
        return None
    # Dictatorship chain: agent ranked r takes its best arm among those left.
    taken: set[ArmId] = set()
    arm_order = []
    for j in common:
        best = max(
            (k for k in instance.arms if k not in taken),
            key=lambda k: instance.mean(j, k),
        )
        arm_order.append(best)
        taken.add(best)
    arm_order.extend(k for k in instance.arms if k not in taken)
    return OrderCertificate(
        agent_order=common, arm_order=tuple(arm_order), kind="serial-dictatorship"
    )


def _verify_spc(
    instance: Instance, agent_order: tuple[AgentId, ...], arm_order: tuple[ArmId, ...]
) -> bool:
    """Replay both displayed SPC conditions under the relabeling."""
    n, k_total = instance.n_agents, instance.n_arms
    for j in range(1, n + 1):
        aj = agent_order[j - 1]
        own = instance.mean(aj, arm_order[j - 1])
        if any(own <= instance.mean(aj, arm_order[k - 1]) for k in range(j + 1, k_total + 1)):
            return False
    for k in range(1, n + 1):
        ak = arm_order[k - 1]
        holder = agent_order[k - 1]
        if any(
            not instance.prefers(ak, holder, agent_order[j - 1])
            for j in range(k + 1, n + 1)
        ):
            return False
    return True


def check_spc(instance: Instance) -> OrderCertificate | None:
    """Greedy elimination of mutually-top pairs; certificate iff it completes.

    A pair is eligible when the agent's best remaining arm ranks that agent
    top among remaining agents. Ties go to the smallest agent id.
    """
    remaining_agents = list(instance.agents)
    remaining_arms = set(instance.arms)
    agent_order: list[AgentId] = []
    arm_order: list[ArmId] = []
    while remaining_agents:
        pick = None
        for j in remaining_agents:
            best_arm = max(remaining_arms, key=lambda k: instance.mean(j, k))
            if all(
                instance.prefers(best_arm, j, j2)
                for j2 in remaining_agents
                if j2 != j
            ):
                pick = (j, best_arm)
                break
        if pick is None:
            return None
        j, k = pick
        agent_order.append(j)
        arm_order.append(k)
        remaining_agents.remove(j)
        remaining_arms.remove(k)
    arm_order.extend(sorted(remaining_arms))
    cert = OrderCertificate(tuple(agent_order), tuple(arm_order), kind="spc")
    if not _verify_spc(instance, cert.agent_order, cert.arm_order):
        raise AssertionError("SPC greedy produced an order that fails replay")
    return cert


def _verify_alpha(
    instance: Instance,
    stable: Matching,
    left: OrderCertificate,
    right: OrderCertificate,
) -> bool:
    n, k_total = instance.n_agents, instance.n_arms
    # Left condition: each agent's stable arm beats every later arm in the left order.
    for j in range(1, n + 1):
        aj = left.agent_order[j - 1]
        own = instance.mean(aj, stable.arm_of(aj))
        if any(
            own <= instance.mean(aj, left.arm_order[k - 1])
            for k in range(j + 1, k_total + 1)
        ):
            return False
    # Right condition: arm a_k prefers its stable agent over every later right-order agent.
    for k in range(1, n + 1):
        ak = right.arm_order[k - 1]
        holder = stable.agent_of(ak)
        if any(
            not instance.prefers(ak, holder, right.agent_order[j - 1])
            for j in range(k + 1, n + 1)
        ):
            return False
    return True


def check_alpha(
    instance: Instance,
) -> tuple[OrderCertificate, OrderCertificate, Matching] | None:
    """Left/right order certificates plus the stable matching, or None.

    The left order eliminates agents whose stable arm beats all remaining
    arms; the right order eliminates stable arms whose stable agent tops the
    remaining agents. Both use smallest-index tie-breaking, and surplus
    (unmatched) arms are appended to the arm orders in index order.
    """
    stable = gale_shapley(instance)
    n = instance.n_agents

    remaining_agents = list(instance.agents)
    remaining_arms = set(instance.arms)
    left_agents: list[AgentId] = []
    left_arms: list[ArmId] = []
    while remaining_agents:
        pick = None
        for j in remaining_agents:
            own_arm = stable.arm_of(j)
            own = instance.mean(j, own_arm)
            if all(own >= instance.mean(j, k) for k in remaining_arms):
                pick = j
                break
        if pick is None:
            return None
        left_agents.append(pick)
        left_arms.append(stable.arm_of(pick))
        remaining_agents.remove(pick)
        remaining_arms.remove(stable.arm_of(pick))
    left_arms.extend(sorted(remaining_arms))

    remaining_agents = list(instance.agents)
    remaining_stable_arms = sorted(stable.matched_arms)
    right_agents: list[AgentId] = []
    right_arms: list[ArmId] = []
    while remaining_stable_arms:
        pick = None
        for k in remaining_stable_arms:
            holder = stable.agent_of(k)
            if all(
                instance.prefers(k, holder, j2)
                for j2 in remaining_agents
                if j2 != holder
            ):
                pick = k
                break
        if pick is None:
            return None
        right_arms.append(pick)
        right_agents.append(stable.agent_of(pick))
        remaining_stable_arms.remove(pick)
        remaining_agents.remove(stable.agent_of(pick))
    right_arms.extend(k for k in instance.arms if k not in stable.matched_arms)

    left = OrderCertificate(tuple(left_agents), tuple(left_arms), kind="alpha-left")
    right = OrderCertificate(tuple(right_agents), tuple(right_arms), kind="alpha-right")
    if not _verify_alpha(instance, stable, left, right):
        raise AssertionError("alpha greedy produced orders that fail replay")
    return left, right, stable


def structure_from_alpha(instance: Instance) -> InstanceStructure | None:
    """Convenience: run check_alpha and build the bound-side structure sets."""
    res = check_alpha(instance)
    if res is None:
        return None
    left, right, stable = res
    return instance_structure(instance, stable, left.orders, right.orders)


def _restricted_instance(
    instance: Instance, drop_agents: set[AgentId], drop_arms: set[ArmId]
) -> Instance:
    keep_agents = [j for j in instance.agents if j not in drop_agents]
    keep_arms = [k for k in instance.arms if k not in drop_arms]
    agent_ix = np.array([j - 1 for j in keep_agents])
    arm_ix = np.array([k - 1 for k in keep_arms])
    relabel = {j: pos + 1 for pos, j in enumerate(keep_agents)}
    prefs = tuple(
        tuple(relabel[j] for j in instance.arm_prefs[k - 1] if j in relabel)
        for k in keep_arms
    )
    return Instance(
        n_agents=len(keep_agents),
        n_arms=len(keep_arms),
        means=instance.means[np.ix_(agent_ix, arm_ix)],
        arm_prefs=prefs,
    )


def check_unqc_brute(instance: Instance) -> bool:
    """Uniqueness consistency by exhaustion: the stable matching is unique and
    stays unique after removing any subset of its pairs. N, K <= 6."""
    n, k = instance.n_agents, instance.n_arms
    if n > UNQC_LIMIT or k > UNQC_LIMIT:
        raise CapacityError(f"brute UnqC limited to N, K <= {UNQC_LIMIT}, got N={n} K={k}")
    top = enumerate_stable(instance)
    if len(top.matchings) != 1:
        return False
    pairs = top.matchings[0].pairs
    for size in range(1, n):  # removing all n pairs leaves an empty market
        for subset in combinations(pairs, size):
            sub = _restricted_instance(
                instance,
                drop_agents={j for j, _ in subset},
                drop_arms={k2 for _, k2 in subset},
            )
            if len(enumerate_stable(sub).matchings) != 1:
                return False
    return True
