"""Random instance construction: mean matrices with minimum-gap rejection
sampling, and arm preference profiles for the general / SPC / alpha classes."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import Instance
from .conditions import check_alpha, check_unqc_brute
from .errors import GenerationError

KINDS = ("general", "spc", "alpha")


@dataclass(frozen=True)
class GenSpec:
    """Parameters for random instance generation.

    ``delta_min_threshold`` lower-bounds every agent's adjacent sorted-row
    gap, hence both the minimum positive gap and the all-pairs gap of the
    result. Infeasible thresholds are not rejected up front; they surface as
    a GenerationError once ``max_rejections`` resamples are exhausted.
    """

    n_agents: int
    n_arms: int
    kind: str = "general"
    delta_min_threshold: float = 0.05
    seed: int = 0
    max_rejections: int = 10**5
    brute_validate: bool = False  # alpha kind: cross-check with the UnqC oracle

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n_agents < 1 or self.n_arms < self.n_agents:
            raise ValueError("need 1 <= n_agents <= n_arms")
        if not 0.0 < self.delta_min_threshold < 1.0:
            raise ValueError("delta_min_threshold must be in (0, 1)")
        if self.brute_validate and self.kind == "alpha" and self.n_agents > 6:
            raise ValueError("brute validation of alpha instances needs n_agents <= 6")


def gen_means(spec: GenSpec, rng: np.random.Generator) -> np.ndarray:
    """An N x K iid-uniform matrix, resampled wholesale until every agent's
    adjacent sorted gap meets the threshold and all entries are distinct."""
    n, k = spec.n_agents, spec.n_arms
    for attempt in range(1, spec.max_rejections + 1):
        means = rng.random((n, k))
        if np.unique(means).size != n * k:
            continue
        if k > 1:
            row_sorted = np.sort(means, axis=1)
            if np.diff(row_sorted, axis=1).min() < spec.delta_min_threshold:
                continue
        return means
    raise GenerationError(
        f"no mean matrix with row gaps >= {spec.delta_min_threshold}",
        attempts=spec.max_rejections,
    )


def _spc_repair(
    means: np.ndarray, prefs: list[list[int]], n: int, k: int
) -> tuple[np.ndarray, list[list[int]]]:
    """Edit random preferences/means in place so the identity order is an SPC order.

    Arm side: place agent i at the first position of arm i's list held by any
    agent >= i. Agent side (the definition also constrains the means): swap
    mu_jj with the row maximum over columns >= j.
    """
    for i in range(1, min(n, k) + 1):
        lst = prefs[i - 1]
        pos = next(p for p, j in enumerate(lst) if j >= i)
        cur = lst.index(i)
        lst[pos], lst[cur] = lst[cur], lst[pos]
    means = means.copy()
    for j in range(1, min(n, k) + 1):
        best = j - 1 + int(np.argmax(means[j - 1, j - 1 :]))
        means[j - 1, j - 1], means[j - 1, best] = means[j - 1, best], means[j - 1, j - 1]
    return means, prefs


def gen_arm_prefs(
    spec: GenSpec, means: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, tuple[tuple[int, ...], ...]]:
    """Arm preference profile for the requested kind.

    Returns (means, prefs): the SPC repair may also edit the mean matrix,
    and the alpha kind resamples profiles until the checker accepts. The
    returned means are the ones the final instance must use.
    """
    n, k = spec.n_agents, spec.n_arms

    def random_profile() -> list[list[int]]:
        return [list(rng.permutation(n) + 1) for _ in range(k)]

    if spec.kind == "general":
        return means, tuple(tuple(p) for p in random_profile())

    if spec.kind == "spc":
        means2, prefs = _spc_repair(means, random_profile(), n, k)
        return means2, tuple(tuple(p) for p in prefs)

    # alpha: resample profiles until the checker accepts the assembled instance
    for attempt in range(1, spec.max_rejections + 1):
        prefs = tuple(tuple(p) for p in random_profile())
        inst = Instance(n_agents=n, n_arms=k, means=means, arm_prefs=prefs)
        if check_alpha(inst) is None:
            continue
        if spec.brute_validate and not check_unqc_brute(inst):
            raise AssertionError("alpha checker accepted a non-UnqC instance")
        return means, prefs
    raise GenerationError(
        "no arm preference profile satisfying the alpha condition",
        attempts=spec.max_rejections,
    )


def generate_instance(spec: GenSpec) -> Instance:
    """Deterministic instance from (spec, seed): same spec gives identical bytes."""
    rng = np.random.default_rng(spec.seed)
    means = gen_means(spec, rng)
    means, prefs = gen_arm_prefs(spec, means, rng)
    return Instance(n_agents=spec.n_agents, n_arms=spec.n_arms, means=means, arm_prefs=prefs)


def instance_comments(spec: GenSpec) -> list[str]:
    """Provenance comments embedded in generated instance files."""
    lines = [
        f"kind={spec.kind} n_agents={spec.n_agents} n_arms={spec.n_arms}",
        f"seed={spec.seed} delta_min_threshold={spec.delta_min_threshold}",
    ]
    if spec.kind == "spc":
        lines.append("spc_agent_side=mirror-swap")  # means edited, see gen module
    return lines


def with_seed(spec: GenSpec, seed: int) -> GenSpec:
    return replace(spec, seed=seed)
