"""Regret ledgers, cross-trial aggregation, and closed-form bound evaluators.

Regret is accounted with true means, not sampled rewards: each round adds
mu_{j,k*_j} - M_j(t) * mu_{j,P_j(t)} (the expectation of the defining regret),
which removes reward noise from the curves. A blocked round additionally adds
mu_{j,k*_j} to the collision-regret series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import AgentId, Instance, InstanceStructure, Matching, gap_summary


class RegretLedger:
    """Cumulative pseudo-regret and collision regret, snapshot at checkpoints.

    Pseudo-regret may decrease for the centralized baseline (matching an arm
    better than the stable one gives a negative increment); collision regret
    never decreases.
    """

    def __init__(self, instance: Instance, stable: Matching, checkpoints: Sequence[int]):
        if stable.matched_agents != set(instance.agents):
            raise ValueError("stable matching must match every agent")
        self.n_agents = instance.n_agents
        self.checkpoints = tuple(sorted(set(int(t) for t in checkpoints)))
        self._stable_mean = [0.0] + [
            instance.mean(j, stable.arm_of(j)) for j in instance.agents
        ]
        self._means = tuple(tuple(row) for row in instance.means)
        self.cum = [0.0] * (self.n_agents + 1)  # 1-based
        self.cum_collision = [0.0] * (self.n_agents + 1)
        self.matched_rounds = [0] * (self.n_agents + 1)
        self._next_ck = 0
        self.snapshots: list[tuple[int, tuple[float, ...], tuple[float, ...]]] = []

    def record_round(
        self, t: int, plays: Mapping[AgentId, int], blocked: frozenset[AgentId]
    ) -> None:
        cum = self.cum
        coll = self.cum_collision
        stable_mean = self._stable_mean
        for j, k in plays.items():
            base = stable_mean[j]
            if j in blocked:
                cum[j] += base
                coll[j] += base
            else:
                cum[j] += base - self._means[j - 1][k - 1]
                self.matched_rounds[j] += 1
        if self._next_ck < len(self.checkpoints) and t == self.checkpoints[self._next_ck]:
            self.snapshots.append((t, tuple(cum[1:]), tuple(coll[1:])))
            self._next_ck += 1

    def snapshot_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(checkpoints x agents) arrays of cumulative regret and collision regret."""
        if len(self.snapshots) != len(self.checkpoints):
            raise ValueError(
                f"recorded {len(self.snapshots)} snapshots for "
                f"{len(self.checkpoints)} checkpoints; was the full horizon run?"
            )
        regret = np.array([s[1] for s in self.snapshots])
        collision = np.array([s[2] for s in self.snapshots])
        return regret, collision


def nearest_rank(sorted_values: np.ndarray, q: float) -> np.ndarray:
    """Nearest-rank percentile along axis 0 of pre-sorted values."""
    n = sorted_values.shape[0]
    r = min(n, math.floor(q * n / 100.0) + 1)
    return sorted_values[r - 1]


@dataclass(frozen=True)
class AggregateCurve:
    """Per (agent, checkpoint) mean and quartiles over trials, plus the
    max-over-agents series aggregated the same way."""

    algorithm: str
    checkpoints: tuple[int, ...]
    n_agents: int
    trials: int
    mean: np.ndarray  # (checkpoints, agents)
    q25: np.ndarray
    q75: np.ndarray
    max_mean: np.ndarray  # (checkpoints,)
    max_q25: np.ndarray
    max_q75: np.ndarray
    collision_mean: np.ndarray  # (checkpoints, agents)


def aggregate(
    algorithm: str,
    checkpoints: Sequence[int],
    regret_per_trial: Sequence[np.ndarray],
    collision_per_trial: Sequence[np.ndarray],
) -> AggregateCurve:
    """Exact means and nearest-rank quartiles across trials."""
    if not regret_per_trial:
        raise ValueError("need at least one trial to aggregate")
    stack = np.stack(regret_per_trial)  # (trials, checkpoints, agents)
    coll = np.stack(collision_per_trial)
    srt = np.sort(stack, axis=0)
    per_trial_max = stack.max(axis=2)  # (trials, checkpoints)
    srt_max = np.sort(per_trial_max, axis=0)
    return AggregateCurve(
        algorithm=algorithm,
        checkpoints=tuple(int(t) for t in checkpoints),
        n_agents=stack.shape[2],
        trials=stack.shape[0],
        mean=stack.mean(axis=0),
        q25=nearest_rank(srt, 25),
        q75=nearest_rank(srt, 75),
        max_mean=per_trial_max.mean(axis=0),
        max_q25=nearest_rank(srt_max, 25),
        max_q75=nearest_rank(srt_max, 75),
        collision_mean=coll.mean(axis=0),
    )


# -- closed-form bound evaluators ---------------------------------------------


@dataclass(frozen=True)
class EtcBoundReport:
    """The four summands of the explore-then-commit regret bound."""

    explore_term: float  # K (log2 T + 2)^(1+eps) / (1+eps)
    convergence_term: float  # (N^2 + K)(log2 T + 2)
    transient_term: float  # 2^((8/gap^2)^(1/eps) * 4^((1+eps)/eps) + 1)
    tail_term: float  # e / (e - 2)
    transient_overflowed: bool

    @property
    def total(self) -> float:
        return self.explore_term + self.convergence_term + self.transient_term + self.tail_term


def etc_bound(
    horizon: int, n_agents: int, n_arms: int, gap: float, epsilon: float
) -> EtcBoundReport:
    """Evaluate the phased-ETC bound; the transient constant is reported as
    +inf (flagged) instead of raising when it exceeds float range."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < gap < 1.0:
        raise ValueError("gap must lie in (0, 1)")
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    log2t = math.log2(horizon)
    explore = n_arms * (log2t + 2.0) ** (1.0 + epsilon) / (1.0 + epsilon)
    convergence = (n_agents**2 + n_arms) * (log2t + 2.0)
    overflow = False
    try:
        exponent = (8.0 / gap**2) ** (1.0 / epsilon) * 4.0 ** ((1.0 + epsilon) / epsilon) + 1.0
        transient = math.inf if exponent >= 1024.0 else 2.0**exponent
        overflow = not math.isfinite(transient)
    except OverflowError:
        transient = math.inf
        overflow = True
    tail = math.e / (math.e - 2.0)
    return EtcBoundReport(explore, convergence, transient, tail, overflow)


def ucbd4_constants(
    n_agents: int, n_arms: int, delta_min: float, gamma: float, beta: float
) -> tuple[int, int, int]:
    """(i1, i2, i_star) by upward scan of the two defining inequalities:
    i1 = min{i : (N-1) * 10*gamma*i / delta_min^2 < beta * 2^(i-1)}
    i2 = min{i : N-1 + N*K*(i-1) <= 2^(i+1)},  i_star = max(8, i1, i2).
    """
    if gamma <= 1.0:
        raise ValueError("gamma must exceed 1")
    if not 0.0 < beta < 1.0 / n_arms:
        raise ValueError("beta must lie in (0, 1/K)")
    if delta_min <= 0:
        raise ValueError("delta_min must be positive")
    coef = (n_agents - 1) * 10.0 * gamma / delta_min**2
    i1 = 1
    while not coef * i1 < beta * 2.0 ** (i1 - 1):
        i1 += 1
        if i1 > 10**6:
            raise ArithmeticError("i1 scan failed to terminate")
    i2 = 1
    while not (n_agents - 1 + n_agents * n_arms * (i2 - 1)) <= 2 ** (i2 + 1):
        i2 += 1
        if i2 > 10**6:
            raise ArithmeticError("i2 scan failed to terminate")
    return i1, i2, max(8, i1, i2)


@dataclass(frozen=True)
class Ucbd4BoundReport:
    """Explicit log-horizon terms plus the transient-phase constants.

    The transient term itself is never evaluated numerically; its ingredient
    constants (i1, i2, i_star, f_alpha, J_max, |H_j|) are reported instead.
    Sums and labels are in the left-order-identity frame.
    """

    agent: int  # original id
    agent_relabeled: int
    horizon: int
    suboptimal_term: float
    collision_term: float
    communication_term: float
    i1: int
    i2: int
    i_star: int
    f_alpha: int
    j_max: int
    hidden_count: int
    blocking_at_stable: int  # |B_{j, k*_j}|
    delta_min: float

    @property
    def explicit_total(self) -> float:
        return self.suboptimal_term + self.collision_term + self.communication_term


def ucbd4_bound(
    instance: Instance,
    structure: InstanceStructure,
    agent: int,
    gamma: float,
    beta: float,
    horizon: int,
) -> Ucbd4BoundReport:
    """Evaluate the phased-UCB regret bound terms for one agent.

    The collision sum runs over blocking agents j' for which the arm is
    neither dominated nor j''s own stable arm (whose gap is zero); the bound
    on j''s play counts only applies to that index set.
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    n, k_total = structure.n_agents, structure.n_arms
    stable = Matching(
        tuple(
            (structure.left_agent_order[r], structure.left_arm_order[r])
            for r in range(n)
        )
    )
    delta_min = gap_summary(instance, stable).delta_min
    if delta_min is None:
        raise ValueError("instance has no positive gap; bounds are undefined")
    i1, i2, i_star = ucbd4_constants(n, k_total, delta_min, gamma, beta)

    j = structure.relabeled_agent(agent)
    orig_agent = structure.left_agent_order
    orig_arm = structure.left_arm_order

    def mu(j_rel: int, k_rel: int) -> float:
        return instance.mean(orig_agent[j_rel - 1], orig_arm[k_rel - 1])

    log_factor = math.log(horizon) + math.sqrt(math.pi / gamma * math.log(horizon))
    dominated = structure.dominated

    suboptimal = 0.0
    for k in range(1, k_total + 1):
        if k in dominated[j] or k == j:
            continue
        gap = mu(j, j) - mu(j, k)
        suboptimal += 8.0 * gamma / gap * log_factor

    collision = 0.0
    stable_mean = mu(j, j)
    for k in range(1, k_total + 1):
        if k in dominated[j]:
            continue
        for j2 in structure.blocking[j][k]:
            if k in dominated[j2] or k == j2:  # k == j2 is j2's stable arm
                continue
            gap2 = mu(j2, j2) - mu(j2, k)
            collision += 8.0 * gamma * stable_mean / gap2**2 * log_factor

    communication = (k_total - 1 + len(structure.blocking[j][j])) * math.log2(horizon)

    return Ucbd4BoundReport(
        agent=agent,
        agent_relabeled=j,
        horizon=horizon,
        suboptimal_term=suboptimal,
        collision_term=collision,
        communication_term=communication,
        i1=i1,
        i2=i2,
        i_star=i_star,
        f_alpha=structure.f_alpha[j],
        j_max=structure.j_max[j],
        hidden_count=len(structure.hidden[j]),
        blocking_at_stable=len(structure.blocking[j][j]),
        delta_min=delta_min,
    )
