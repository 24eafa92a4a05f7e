"""Experiment configuration, seeded parallel trial execution, and CSV output.

Determinism contract: every random draw in a trial comes from a stream seeded
by (master_seed, trial, algorithm_id) - plus the agent id for policy-internal
coins - so results are byte-identical regardless of worker count or
scheduling. Aggregation folds trials in index order.
"""

from __future__ import annotations

import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import Instance, Matching, load_instance
from .env import Observation, Regime, resolve_blocked, resolve_round
from .errors import ConfigError
from .gen import GenSpec, generate_instance
from .policies import (
    CaUcbPolicy,
    EtcPolicy,
    PhaseSchedule,
    UcbCState,
    UcbD3Policy,
    UcbD4Policy,
    ucbc_round,
)
from .regret import AggregateCurve, RegretLedger, aggregate
from .stable import gale_shapley

ALGORITHMS = ("etc", "ucbd4", "ucbd3", "ucbc", "caucb")
ALGO_IDS = {name: i + 1 for i, name in enumerate(ALGORITHMS)}
ALGO_REGIMES = {
    "etc": Regime.FULL_DECENTRALIZED,
    "ucbd4": Regime.FULL_DECENTRALIZED,
    "ucbd3": Regime.FULL_DECENTRALIZED,
    "ucbc": Regime.CENTRALIZED,
    "caucb": Regime.PARTIAL,
}
_ALGO_KEYS = {
    "etc": {"epsilon", "c0", "c1", "regime"},
    "ucbd4": {"gamma", "beta", "c0", "c1", "regime"},
    "ucbd3": {"gamma", "c0", "c1", "regime"},
    "ucbc": {"gamma", "regime"},
    "caucb": {"gamma", "lambda", "regime"},
}

PER_TRIAL_HEADER = "run_id,instance_id,algorithm,trial,agent,t,cum_regret,cum_collision_regret"
AGGREGATE_HEADER = "algorithm,agent,t,mean,q25,q75,trials"


def parse_fraction(value: Any, key: str) -> float:
    """Floats, ints, or 'a/b' strings (handy for beta = 1/12)."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str) and "/" in value:
        num, den = value.split("/", 1)
        try:
            return float(num) / float(den)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad fraction for {key}: {value!r}") from exc
    raise ConfigError(f"expected a number for {key}, got {value!r}")


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.name!r}; choose from {ALGORITHMS}")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithms: tuple[AlgorithmSpec, ...]
    horizon: int
    trials: int = 50
    name: str = "run"
    instance_file: str | None = None
    genspec: GenSpec | None = None
    checkpoint_count: int = 100
    checkpoints: tuple[int, ...] | None = None  # explicit grid overrides the count
    master_seed: int = 0
    workers: int = 1
    out_dir: str = "results"

    def __post_init__(self) -> None:
        if (self.instance_file is None) == (self.genspec is None):
            raise ConfigError("configure exactly one of instance file / generator spec")
        if not self.algorithms:
            raise ConfigError("configure at least one algorithm")
        if len({a.name for a in self.algorithms}) != len(self.algorithms):
            raise ConfigError("each algorithm may appear once")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.checkpoints is not None:
            cks = self.checkpoints
            if not cks or list(cks) != sorted(set(cks)):
                raise ConfigError("explicit checkpoints must be strictly increasing")
            if cks[0] < 1 or cks[-1] > self.horizon:
                raise ConfigError("checkpoints must lie in [1, horizon]")
        elif self.checkpoint_count < 1:
            raise ConfigError("checkpoint count must be at least 1")


def _require_keys(section: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def parse_genspec(section: Mapping[str, Any]) -> GenSpec:
    _require_keys(
        section,
        {"kind", "n_agents", "n_arms", "delta_min", "seed", "max_rejections"},
        "[instance]",
    )
    try:
        return GenSpec(
            n_agents=int(section["n_agents"]),
            n_arms=int(section["n_arms"]),
            kind=str(section.get("kind", "general")),
            delta_min_threshold=float(section.get("delta_min", 0.05)),
            seed=int(section.get("seed", 0)),
            max_rejections=int(section.get("max_rejections", 10**5)),
        )
    except KeyError as exc:
        raise ConfigError(f"[instance] generator spec needs key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad [instance] value: {exc}") from exc


def parse_config_dict(raw: Mapping[str, Any]) -> ExperimentConfig:
    _require_keys(raw, {"name", "instance", "run", "algorithms"}, "config")
    inst = raw.get("instance")
    if not isinstance(inst, Mapping):
        raise ConfigError("config needs an [instance] section")
    instance_file: str | None = None
    genspec: GenSpec | None = None
    if "file" in inst:
        _require_keys(inst, {"file"}, "[instance]")
        instance_file = str(inst["file"])
    else:
        genspec = parse_genspec(inst)

    run = raw.get("run")
    if not isinstance(run, Mapping):
        raise ConfigError("config needs a [run] section")
    _require_keys(
        run, {"horizon", "trials", "checkpoints", "seed", "workers", "out"}, "[run]"
    )
    if "horizon" not in run:
        raise ConfigError("[run] needs a horizon")
    cks_raw = run.get("checkpoints", 100)
    count, explicit = 100, None
    if isinstance(cks_raw, int):
        count = cks_raw
    elif isinstance(cks_raw, (list, tuple)):
        explicit = tuple(int(t) for t in cks_raw)
    else:
        raise ConfigError("checkpoints must be a count or a list of rounds")

    algos_raw = raw.get("algorithms")
    if not isinstance(algos_raw, Mapping) or not algos_raw:
        raise ConfigError("config needs a non-empty [algorithms] section")
    algos = []
    for name, params in algos_raw.items():
        if name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
        if not isinstance(params, Mapping):
            raise ConfigError(f"[algorithms.{name}] must be a table")
        _require_keys(params, _ALGO_KEYS[name], f"[algorithms.{name}]")
        regime = params.get("regime")
        if regime is not None and str(regime) != ALGO_REGIMES[name].value:
            raise ConfigError(
                f"{name} runs under the {ALGO_REGIMES[name].value!r} regime, not {regime!r}"
            )
        clean = {
            key: parse_fraction(v, key) for key, v in params.items() if key != "regime"
        }
        algos.append(AlgorithmSpec(name, clean))

    return ExperimentConfig(
        name=str(raw.get("name", "run")),
        instance_file=instance_file,
        genspec=genspec,
        horizon=int(run["horizon"]),
        trials=int(run.get("trials", 50)),
        checkpoint_count=count,
        checkpoints=explicit,
        master_seed=int(run.get("seed", 0)),
        workers=int(run.get("workers", 1)),
        out_dir=str(run.get("out", "results")),
        algorithms=tuple(algos),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    return parse_config_dict(raw)


# -- trial execution -----------------------------------------------------------


def geometric_checkpoints(start: int, horizon: int, count: int) -> tuple[int, ...]:
    """Log-spaced integer grid from the ranking-period end to the horizon."""
    start = max(1, start)
    if horizon < start:
        raise ConfigError(f"horizon {horizon} shorter than the ranking period {start}")
    pts = np.unique(np.rint(np.geomspace(start, horizon, count)).astype(int))
    return tuple(int(t) for t in pts)


def resolve_checkpoints(config: ExperimentConfig, instance: Instance) -> tuple[int, ...]:
    if config.checkpoints is not None:
        return config.checkpoints
    return geometric_checkpoints(instance.n_agents, config.horizon, config.checkpoint_count)


def _schedule(instance: Instance, params: Mapping[str, float]) -> PhaseSchedule:
    n, k = instance.n_agents, instance.n_arms
    if "c0" in params or "c1" in params:
        return PhaseSchedule(n, k, c0=params.get("c0", 2.0), c1=params.get("c1", 1.0), tuned=True)
    return PhaseSchedule(n, k)


def _tuned_default(instance: Instance, c0: float, c1: float) -> PhaseSchedule:
    return PhaseSchedule(instance.n_agents, instance.n_arms, c0=c0, c1=c1, tuned=True)


def make_policies(
    spec: AlgorithmSpec, instance: Instance, rng_seed: Sequence[int]
) -> list:
    """One policy object per agent (decentralized families)."""
    n, k = instance.n_agents, instance.n_arms
    p = spec.params
    large = n > 8  # large markets default to the tuned phase lengths
    if spec.name == "etc":
        sched = _schedule(instance, p) if ("c0" in p or "c1" in p) else (
            _tuned_default(instance, 1.5, 1.0) if large else PhaseSchedule(n, k)
        )
        return [
            EtcPolicy(n, k, epsilon=p.get("epsilon", 0.2), schedule=sched)
            for _ in instance.agents
        ]
    if spec.name in ("ucbd4", "ucbd3"):
        sched = _schedule(instance, p) if ("c0" in p or "c1" in p) else (
            _tuned_default(instance, 1.2, 3.0) if large else PhaseSchedule(n, k)
        )
        if spec.name == "ucbd3":
            return [
                UcbD3Policy(n, k, gamma=p.get("gamma", 2.0), schedule=sched)
                for _ in instance.agents
            ]
        return [
            UcbD4Policy(
                n,
                k,
                gamma=p.get("gamma", 2.0),
                beta=p.get("beta", 1.0 / (2 * k)),
                schedule=sched,
            )
            for _ in instance.agents
        ]
    if spec.name == "caucb":
        return [
            CaUcbPolicy(
                j,
                instance,
                gamma=p.get("gamma", 2.0),
                lam=p.get("lambda", 0.2),
                rng=np.random.default_rng([*rng_seed, j]),
            )
            for j in instance.agents
        ]
    raise ConfigError(f"{spec.name} has no per-agent policy form")


@dataclass(frozen=True)
class TrialResult:
    trial: int
    regret: dict[str, np.ndarray]  # per algorithm, (checkpoints x agents)
    collision: dict[str, np.ndarray]
    anomalies: dict[str, int]


def run_trial(
    config: ExperimentConfig,
    instance: Instance,
    stable: Matching,
    checkpoints: tuple[int, ...],
    trial: int,
) -> TrialResult:
    if config.horizon < instance.n_agents:
        raise ConfigError(
            f"horizon {config.horizon} shorter than the ranking period {instance.n_agents}"
        )
    regret: dict[str, np.ndarray] = {}
    collision: dict[str, np.ndarray] = {}
    anomalies: dict[str, int] = {}
    for spec in config.algorithms:
        seed_key = (config.master_seed, trial, ALGO_IDS[spec.name])
        env_rng = np.random.default_rng(list(seed_key))
        ledger = RegretLedger(instance, stable, checkpoints)
        if spec.name == "ucbc":
            states = {
                j: UcbCState(instance.n_arms, gamma=spec.params.get("gamma", 2.0))
                for j in instance.agents
            }
            for t in range(1, config.horizon + 1):
                matching = ucbc_round(states, t, instance, env_rng)
                ledger.record_round(t, dict(matching.pairs), frozenset())
            anomalies[spec.name] = 0
        elif ALGO_REGIMES[spec.name] is Regime.FULL_DECENTRALIZED:
            # agents only see their own (matched, reward): skip the Matching
            # and observation-dict construction of the general path
            policies = make_policies(spec, instance, seed_key)
            agents = instance.agents
            means = tuple(tuple(row) for row in instance.means)
            blocked_obs = Observation(False, None, None, False)
            rng_uniform = env_rng.random
            for t in range(1, config.horizon + 1):
                plays = {j: policies[j - 1].act(t) for j in agents}
                blocked = resolve_blocked(instance, plays)
                for j in agents:
                    if j in blocked:
                        policies[j - 1].update(t, blocked_obs)
                    else:
                        reward = 1.0 if rng_uniform() < means[j - 1][plays[j] - 1] else 0.0
                        policies[j - 1].update(t, Observation(True, reward, None, False))
                ledger.record_round(t, plays, blocked)
            anomalies[spec.name] = sum(getattr(pol, "anomalies", 0) for pol in policies)
        else:  # partial information: agents additionally see the full matching
            policies = make_policies(spec, instance, seed_key)
            agents = instance.agents
            means = tuple(tuple(row) for row in instance.means)
            rng_uniform = env_rng.random
            for t in range(1, config.horizon + 1):
                plays = {j: policies[j - 1].act(t) for j in agents}
                matching, blocked = resolve_round(instance, plays)
                for j in agents:
                    if j in blocked:
                        policies[j - 1].update(t, Observation(False, None, matching, True))
                    else:
                        reward = 1.0 if rng_uniform() < means[j - 1][plays[j] - 1] else 0.0
                        policies[j - 1].update(t, Observation(True, reward, matching, True))
                ledger.record_round(t, plays, blocked)
            anomalies[spec.name] = sum(getattr(pol, "anomalies", 0) for pol in policies)
        regret[spec.name], collision[spec.name] = ledger.snapshot_arrays()
    return TrialResult(trial, regret, collision, anomalies)


def _trial_worker(args: tuple) -> TrialResult:
    return run_trial(*args)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    instance: Instance
    instance_id: str
    checkpoints: tuple[int, ...]
    curves: dict[str, AggregateCurve]
    trials: tuple[TrialResult, ...]
    files: tuple[Path, ...]


def resolve_instance(config: ExperimentConfig) -> tuple[Instance, str]:
    if config.instance_file is not None:
        path = Path(config.instance_file)
        if not path.is_file():
            raise ConfigError(f"instance file not found: {path}")
        return load_instance(path), path.stem
    spec = config.genspec
    instance_id = f"{spec.kind}-n{spec.n_agents}k{spec.n_arms}-s{spec.seed}"
    return generate_instance(spec), instance_id


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    instance, instance_id = resolve_instance(config)
    stable = gale_shapley(instance)
    checkpoints = resolve_checkpoints(config, instance)
    if config.horizon < instance.n_agents:
        raise ConfigError(
            f"horizon {config.horizon} shorter than the ranking period {instance.n_agents}"
        )

    jobs = [(config, instance, stable, checkpoints, trial) for trial in range(1, config.trials + 1)]
    if config.workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_trial_worker, jobs, chunksize=1))
    else:
        results = [run_trial(*job) for job in jobs]
    results.sort(key=lambda r: r.trial)

    curves = {
        spec.name: aggregate(
            spec.name,
            checkpoints,
            [r.regret[spec.name] for r in results],
            [r.collision[spec.name] for r in results],
        )
        for spec in config.algorithms
    }

    files: tuple[Path, ...] = ()
    if write:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = (
            _write_per_trial(out / "per_trial.csv", config, instance_id, checkpoints, results),
            _write_aggregate(out / "aggregate.csv", config, curves),
            _write_plot_data(out / "plot_data.csv", config, curves),
        )
    return ExperimentResult(
        config=config,
        instance=instance,
        instance_id=instance_id,
        checkpoints=checkpoints,
        curves=curves,
        trials=tuple(results),
        files=files,
    )


# -- delimited output -----------------------------------------------------------


def _write_per_trial(
    path: Path,
    config: ExperimentConfig,
    instance_id: str,
    checkpoints: tuple[int, ...],
    results: Sequence[TrialResult],
) -> Path:
    lines = [PER_TRIAL_HEADER]
    for spec in config.algorithms:
        for r in results:
            reg = r.regret[spec.name]
            coll = r.collision[spec.name]
            for a in range(reg.shape[1]):
                for ci, t in enumerate(checkpoints):
                    lines.append(
                        f"{config.name},{instance_id},{spec.name},{r.trial},{a + 1},"
                        f"{t},{float(reg[ci, a])!r},{float(coll[ci, a])!r}"
                    )
    path.write_text("\n".join(lines) + "\n")
    return path


def _aggregate_rows(config: ExperimentConfig, curves: dict[str, AggregateCurve], with_max: bool):
    for spec in config.algorithms:
        c = curves[spec.name]
        for a in range(c.n_agents):
            for ci, t in enumerate(c.checkpoints):
                yield (
                    f"{spec.name},{a + 1},{t},{float(c.mean[ci, a])!r},"
                    f"{float(c.q25[ci, a])!r},{float(c.q75[ci, a])!r},{c.trials}"
                )
        if with_max:
            for ci, t in enumerate(c.checkpoints):
                yield (
                    f"{spec.name},max,{t},{float(c.max_mean[ci])!r},"
                    f"{float(c.max_q25[ci])!r},{float(c.max_q75[ci])!r},{c.trials}"
                )


def _write_aggregate(path: Path, config, curves) -> Path:
    lines = [AGGREGATE_HEADER, *_aggregate_rows(config, curves, with_max=False)]
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_plot_data(path: Path, config, curves) -> Path:
    lines = [AGGREGATE_HEADER, *_aggregate_rows(config, curves, with_max=True)]
    path.write_text("\n".join(lines) + "\n")
    return path
