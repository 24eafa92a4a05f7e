"""Domain types for two-sided matching markets with bandit agents.

Agents are numbered 1..N and arms 1..K (N <= K). An :class:`Instance` carries
the reward-mean matrix (which induces every agent's preference over arms, best
mean first) and each arm's total preference order over agents. A
:class:`Matching` is a partial injective assignment agent<->arm.

On top of those this module computes the structural quantities used by the
closed-form regret bounds: per-(agent, arm) gaps, dominated arms, blocking
agents, blocked non-dominated arms, and the left/right-order bookkeeping
(``lr``, ``lr_max``, ``f_alpha``, ``J_max``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

AgentId = int  # 1-based, 1..N
ArmId = int  # 1-based, 1..K


@dataclass(frozen=True)
class Instance:
    """A matching market: mean matrix + arm preference lists.

    ``means[j-1, k-1]`` is the expected reward of agent ``j`` on arm ``k``.
    ``arm_prefs[k-1]`` lists agent ids, most preferred first. All N*K means
    must be pairwise distinct and lie in [0, 1]; agent preferences are always
    derived from the mean rows and never stored separately.
    """

    n_agents: int
    n_arms: int
    means: np.ndarray
    arm_prefs: tuple[tuple[AgentId, ...], ...]

    # derived, filled in __post_init__
    _arm_rank: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _agent_prefs: tuple[tuple[ArmId, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n, k = self.n_agents, self.n_arms
        if n < 1 or k < n:
            raise ValueError(f"need 1 <= n_agents <= n_arms, got N={n}, K={k}")
        means = np.asarray(self.means, dtype=float)
        if means.shape != (n, k):
            raise ValueError(f"means must have shape ({n}, {k}), got {means.shape}")
        if np.any(means < 0.0) or np.any(means > 1.0):
            raise ValueError("all means must lie in [0, 1]")
        if np.unique(means).size != n * k:
            raise ValueError("all means must be pairwise distinct")
        means = means.copy()
        means.setflags(write=False)
        object.__setattr__(self, "means", means)

        if len(self.arm_prefs) != k:
            raise ValueError(f"need {k} arm preference lists, got {len(self.arm_prefs)}")
        prefs = tuple(tuple(int(j) for j in p) for p in self.arm_prefs)
        for ki, pref in enumerate(prefs, start=1):
            if sorted(pref) != list(range(1, n + 1)):
                raise ValueError(f"arm {ki} preference is not a permutation of 1..{n}")
        object.__setattr__(self, "arm_prefs", prefs)

        # rank[k-1][j-1]: position of agent j in arm k's list (0 = most preferred)
        rank = []
        for pref in prefs:
            row = [0] * n
            for pos, j in enumerate(pref):
                row[j - 1] = pos
            rank.append(tuple(row))
        object.__setattr__(self, "_arm_rank", tuple(rank))

        agent_prefs = tuple(
            tuple(int(x) + 1 for x in np.argsort(-means[j]))  # descending mean
            for j in range(n)
        )
        object.__setattr__(self, "_agent_prefs", agent_prefs)

    # -- accessors -------------------------------------------------------

    def mean(self, agent: AgentId, arm: ArmId) -> float:
        return float(self.means[agent - 1, arm - 1])

    def agent_pref(self, agent: AgentId) -> tuple[ArmId, ...]:
        """Arms ordered by agent's means, best first."""
        return self._agent_prefs[agent - 1]

    def arm_rank(self, arm: ArmId, agent: AgentId) -> int:
        """Position of ``agent`` in ``arm``'s list; lower is preferred."""
        return self._arm_rank[arm - 1][agent - 1]

    def prefers(self, arm: ArmId, agent: AgentId, over: AgentId) -> bool:
        r = self._arm_rank[arm - 1]
        return r[agent - 1] < r[over - 1]

    @property
    def agents(self) -> range:
        return range(1, self.n_agents + 1)

    @property
    def arms(self) -> range:
        return range(1, self.n_arms + 1)


@dataclass(frozen=True)
class Matching:
    """Injective partial assignment agent<->arm; unmatched entries are absent."""

    pairs: tuple[tuple[AgentId, ArmId], ...]

    _by_agent: dict = field(init=False, repr=False, compare=False)
    _by_arm: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pairs = tuple(sorted((int(j), int(k)) for j, k in self.pairs))
        by_agent = {j: k for j, k in pairs}
        by_arm = {k: j for j, k in pairs}
        if len(by_agent) != len(pairs) or len(by_arm) != len(pairs):
            raise ValueError("matching must be injective on both sides")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_by_agent", by_agent)
        object.__setattr__(self, "_by_arm", by_arm)

    def arm_of(self, agent: AgentId) -> ArmId | None:
        return self._by_agent.get(agent)

    def agent_of(self, arm: ArmId) -> AgentId | None:
        return self._by_arm.get(arm)

    @property
    def matched_agents(self) -> frozenset[AgentId]:
        return frozenset(self._by_agent)

    @property
    def matched_arms(self) -> frozenset[ArmId]:
        return frozenset(self._by_arm)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class GapSummary:
    """Reward gaps relative to a reference (stable) matching.

    ``gaps[j-1, k-1]`` = mu_{j, k*_j} - mu_{jk}; zero at the matched arm and
    possibly negative elsewhere. ``delta_min`` is the smallest strictly
    positive entry (None when no positive gap exists). ``all_pairs_gap`` is
    the minimum |mu_jk - mu_jk'| over every agent and every arm pair (None
    when K = 1); this is the gap the explore-then-commit bound uses.
    """

    gaps: np.ndarray
    delta_min: float | None
    all_pairs_gap: float | None


def gap_summary(instance: Instance, stable: Matching) -> GapSummary:
    """Compute per-(agent, arm) gaps against ``stable``, which must match every agent."""
    if stable.matched_agents != set(instance.agents):
        missing = set(instance.agents) - stable.matched_agents
        raise ValueError(f"stable matching leaves agents unmatched: {sorted(missing)}")
    stable_means = np.array(
        [instance.mean(j, stable.arm_of(j)) for j in instance.agents]
    )
    gaps = stable_means[:, None] - instance.means
    gaps.setflags(write=False)

    positive = gaps[gaps > 0.0]
    delta_min = float(positive.min()) if positive.size else None

    if instance.n_arms > 1:
        row_sorted = np.sort(instance.means, axis=1)
        all_pairs_gap = float(np.diff(row_sorted, axis=1).min())
    else:
        all_pairs_gap = None
    return GapSummary(gaps=gaps, delta_min=delta_min, all_pairs_gap=all_pairs_gap)


@dataclass(frozen=True)
class InstanceStructure:
    """Structure sets of the regret bounds, in the left-order-identity frame.

    Everything here is expressed with agents and arms relabeled so that the
    given left order is the identity (the frame the bound formulas assume);
    ``left_agent_order[r-1]`` / ``left_arm_order[r-1]`` recover the original
    id of relabeled agent/arm ``r``. ``original_frame()`` maps the sets back.

    dominated[j]  - D_j, stable arms of agents before j in the left order
    blocking[j][k] - B_jk, agents arm k prefers over agent j
    hidden[j]     - H_j, non-dominated arms with a blocking agent j' for
                    which the arm is not dominated either
    j_max[j]      - max(j+1, blocking agents over H_j)
    lr[j]         - position of agent j in the right order
    lr_max[j]     - running max of lr over 1..j
    f_alpha[j]    - j + lr_max(j)
    """

    n_agents: int
    n_arms: int
    left_agent_order: tuple[AgentId, ...]
    left_arm_order: tuple[ArmId, ...]
    right_agent_order: tuple[AgentId, ...]
    right_arm_order: tuple[ArmId, ...]
    dominated: dict[int, frozenset[int]]
    blocking: dict[int, dict[int, frozenset[int]]]
    hidden: dict[int, frozenset[int]]
    j_max: dict[int, int]
    lr: dict[int, int]
    lr_max: dict[int, int]
    f_alpha: dict[int, int]

    def relabeled_agent(self, original: AgentId) -> int:
        return self.left_agent_order.index(original) + 1

    def relabeled_arm(self, original: ArmId) -> int:
        return self.left_arm_order.index(original) + 1

    def original_frame(self) -> dict[str, dict]:
        """The same sets keyed and valued by original agent/arm ids."""
        ag = self.left_agent_order
        ar = self.left_arm_order
        return {
            "dominated": {
                ag[j - 1]: frozenset(ar[k - 1] for k in ks)
                for j, ks in self.dominated.items()
            },
            "blocking": {
                ag[j - 1]: {
                    ar[k - 1]: frozenset(ag[j2 - 1] for j2 in js)
                    for k, js in per_arm.items()
                }
                for j, per_arm in self.blocking.items()
            },
            "hidden": {
                ag[j - 1]: frozenset(ar[k - 1] for k in ks)
                for j, ks in self.hidden.items()
            },
        }


def instance_structure(
    instance: Instance,
    stable: Matching,
    left_order: tuple[Sequence[AgentId], Sequence[ArmId]],
    right_order: tuple[Sequence[AgentId], Sequence[ArmId]],
) -> InstanceStructure:
    """Compute the bound-side structure sets under the given orders.

    ``left_order`` and ``right_order`` are (agent sequence, arm sequence)
    pairs as produced by the order checkers. The left order must relabel the
    stable matching to the identity (k*_j = j) and the right order must pair
    each arm with its stable agent; anything else is rejected.
    """
    n, k_total = instance.n_agents, instance.n_arms
    left_agents, left_arms = tuple(left_order[0]), tuple(left_order[1])
    right_agents, right_arms = tuple(right_order[0]), tuple(right_order[1])
    if sorted(left_agents) != list(instance.agents) or sorted(left_arms) != list(instance.arms):
        raise ValueError("left order must be a permutation of agents and arms")
    if sorted(right_agents) != list(instance.agents) or sorted(right_arms) != list(instance.arms):
        raise ValueError("right order must be a permutation of agents and arms")
    if stable.matched_agents != set(instance.agents):
        raise ValueError("stable matching must match every agent")

    # Relabel: relabeled agent j is original left_agents[j-1], same for arms.
    arm_label = {orig: r + 1 for r, orig in enumerate(left_arms)}
    agent_label = {orig: r + 1 for r, orig in enumerate(left_agents)}

    stable_arm = {}  # relabeled agent -> relabeled arm
    for j_orig in instance.agents:
        stable_arm[agent_label[j_orig]] = arm_label[stable.arm_of(j_orig)]
    for j in range(1, n + 1):
        if stable_arm[j] != j:
            raise ValueError(
                "left order is inconsistent with the stable matching: "
                f"relabeled agent {j} is matched to relabeled arm {stable_arm[j]}"
            )
    for pos in range(n):
        if stable.arm_of(right_agents[pos]) != right_arms[pos]:
            raise ValueError(
                "right order is inconsistent with the stable matching at position "
                f"{pos + 1}: agent {right_agents[pos]} vs arm {right_arms[pos]}"
            )

    dominated = {j: frozenset(range(1, j)) for j in range(1, n + 1)}

    # B_jk in relabeled coordinates, from the original arm preference lists.
    blocking: dict[int, dict[int, frozenset[int]]] = {}
    for j in range(1, n + 1):
        j_orig = left_agents[j - 1]
        per_arm = {}
        for k in range(1, k_total + 1):
            k_orig = left_arms[k - 1]
            per_arm[k] = frozenset(
                agent_label[j2]
                for j2 in instance.agents
                if j2 != j_orig and instance.prefers(k_orig, j2, j_orig)
            )
        blocking[j] = per_arm

    # A non-dominated arm is hidden for j only when some *later* agent (one
    # that settles after j) both blocks it and does not dominate it; earlier
    # blockers are already frozen and cannot deadlock j. Under homogeneous
    # arm preferences every blocker is earlier, so all hidden sets are empty.
    hidden = {}
    for j in range(1, n + 1):
        hidden[j] = frozenset(
            k
            for k in range(1, k_total + 1)
            if k not in dominated[j]
            and any(j2 > j and k not in dominated[j2] for j2 in blocking[j][k])
        )

    j_max = {}
    for j in range(1, n + 1):
        blockers = {j2 for k in hidden[j] for j2 in blocking[j][k]}
        j_max[j] = max([j + 1, *blockers])

    right_agents_relabeled = [agent_label[a] for a in right_agents]
    lr = {j: right_agents_relabeled.index(j) + 1 for j in range(1, n + 1)}
    lr_max = {}
    running = 0
    for j in range(1, n + 1):
        running = max(running, lr[j])
        lr_max[j] = running
    f_alpha = {j: j + lr_max[j] for j in range(1, n + 1)}

    return InstanceStructure(
        n_agents=n,
        n_arms=k_total,
        left_agent_order=left_agents,
        left_arm_order=left_arms,
        right_agent_order=right_agents,
        right_arm_order=right_arms,
        dominated=dominated,
        blocking=blocking,
        hidden=hidden,
        j_max=j_max,
        lr=lr,
        lr_max=lr_max,
        f_alpha=f_alpha,
    )


# -- plain-text serialization ------------------------------------------------
#
# Header "N K", then N rows of K means, then K rows of N agent ids (each
# arm's preference, most preferred first). '#'-prefixed lines are comments.


def instance_to_text(instance: Instance, comments: Iterable[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"{instance.n_agents} {instance.n_arms}")
    for j in range(instance.n_agents):
        lines.append(" ".join(repr(float(x)) for x in instance.means[j]))
    for pref in instance.arm_prefs:
        lines.append(" ".join(str(j) for j in pref))
    return "\n".join(lines) + "\n"


def instance_from_text(text: str) -> Instance:
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise ValueError("empty instance file")
    try:
        n, k = (int(x) for x in rows[0].split())
    except ValueError as exc:
        raise ValueError(f"bad instance header {rows[0]!r}") from exc
    if len(rows) != 1 + n + k:
        raise ValueError(f"expected {1 + n + k} data lines for N={n} K={k}, got {len(rows)}")
    means = np.array([[float(x) for x in rows[1 + j].split()] for j in range(n)])
    prefs = tuple(tuple(int(x) for x in rows[1 + n + i].split()) for i in range(k))
    return Instance(n_agents=n, n_arms=k, means=means, arm_prefs=prefs)


def save_instance(instance: Instance, path: str | Path, comments: Iterable[str] = ()) -> None:
    Path(path).write_text(instance_to_text(instance, comments))


def load_instance(path: str | Path) -> Instance:
    return instance_from_text(Path(path).read_text())
