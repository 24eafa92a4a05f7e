"""Command-line entry points.

Subcommands: ``generate`` (instance files), ``check`` (structural-condition
certificates), ``run`` (experiments; writes CSVs and, with --plot, PNG
figures), ``bounds`` (closed-form bound reports), ``plot`` (figures from a
written plot-data file).

Exit codes: 0 success, 2 usage, 3 configuration, 4 generation failure,
5 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .conditions import (
    check_alpha,
    check_serial_dictatorship,
    check_spc,
    check_unqc_brute,
    structure_from_alpha,
)
from .core import load_instance, save_instance
from .errors import CapacityError, ConfigError, GenerationError
from .gen import GenSpec, instance_comments, generate_instance
from .harness import (
    load_config,
    parse_fraction,
    parse_genspec,
    run_experiment,
)
from .regret import etc_bound, ucbd4_bound, ucbd4_constants

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_GENERATION = 4
EXIT_RUNTIME = 5


def _load_genspec_file(path: str, seed_override: int | None) -> GenSpec:
    import sys as _sys

    if _sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib

    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"generator spec file not found: {p}")
    try:
        raw = tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    section = raw.get("instance", raw)
    spec = parse_genspec(section)
    if seed_override is not None:
        spec = dataclasses.replace(spec, seed=seed_override)
    return spec


def cmd_generate(args: argparse.Namespace) -> int:
    spec = _load_genspec_file(args.spec, args.seed)
    instance = generate_instance(spec)
    save_instance(instance, args.out, comments=instance_comments(spec))
    print(f"wrote {args.out} ({spec.kind}, N={spec.n_agents}, K={spec.n_arms})")
    return EXIT_OK


def _certificate_payload(cert) -> dict:
    return {"agents": list(cert.agent_order), "arms": list(cert.arm_order)}


def cmd_check(args: argparse.Namespace) -> int:
    path = Path(args.instance)
    if not path.is_file():
        raise ConfigError(f"instance file not found: {path}")
    instance = load_instance(path)
    sd = check_serial_dictatorship(instance)
    spc = check_spc(instance)
    alpha = check_alpha(instance)
    report: dict = {
        "instance": str(path),
        "n_agents": instance.n_agents,
        "n_arms": instance.n_arms,
        "serial_dictatorship": _certificate_payload(sd) if sd else None,
        "spc": _certificate_payload(spc) if spc else None,
    }
    if alpha:
        left, right, stable = alpha
        report["alpha"] = {
            "left": _certificate_payload(left),
            "right": _certificate_payload(right),
            "stable_matching": [list(p) for p in stable.pairs],
        }
    else:
        report["alpha"] = None
    if instance.n_agents <= 6 and instance.n_arms <= 6:
        report["uniqueness_consistency"] = check_unqc_brute(instance)
    else:
        report["uniqueness_consistency"] = "skipped (brute oracle limited to N,K<=6)"

    if args.format == "json":
        print(json.dumps(report, indent=2))
        return EXIT_OK
    for key in ("serial_dictatorship", "spc", "alpha", "uniqueness_consistency"):
        value = report[key]
        if value is None:
            print(f"{key}: no")
        elif value is True:
            print(f"{key}: yes")
        elif value is False:
            print(f"{key}: no")
        elif key == "alpha":
            print(
                f"alpha: yes  left agents={value['left']['agents']} "
                f"arms={value['left']['arms']}; right agents={value['right']['agents']} "
                f"arms={value['right']['arms']}; stable={value['stable_matching']}"
            )
        elif isinstance(value, dict):
            print(f"{key}: yes  agents={value['agents']} arms={value['arms']}")
        else:
            print(f"{key}: {value}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        config = dataclasses.replace(config, **overrides)
    result = run_experiment(config)
    for f in result.files:
        print(f"wrote {f}")
    anomalies = {
        name: sum(t.anomalies[name] for t in result.trials)
        for name in (s.name for s in config.algorithms)
    }
    for name, curve in result.curves.items():
        final = curve.max_mean[-1]
        note = f" anomalies={anomalies[name]}" if anomalies.get(name) else ""
        print(
            f"{name}: trials={curve.trials} T={result.checkpoints[-1]} "
            f"max-agent mean regret={final:.2f}{note}"
        )
    if args.plot:
        from .plotting import render_figures

        for f in render_figures(result.curves, config.out_dir, run_id=config.name):
            print(f"wrote {f}")
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    payload: dict
    if args.algo == "etc":
        for flag in ("horizon", "n", "k", "gap", "epsilon"):
            if getattr(args, flag) is None:
                raise ConfigError(f"bounds --algo etc needs --{flag.replace('_', '-')}")
        r = etc_bound(args.horizon, args.n, args.k, args.gap, args.epsilon)
        payload = {
            "explore_term": r.explore_term,
            "convergence_term": r.convergence_term,
            "transient_term": r.transient_term,
            "tail_term": r.tail_term,
            "transient_overflowed": r.transient_overflowed,
            "total": r.total,
        }
    elif args.instance is not None:
        instance = load_instance(args.instance)
        structure = structure_from_alpha(instance)
        if structure is None:
            raise ConfigError(
                "instance does not satisfy the alpha-condition; no bound applies"
            )
        if args.horizon is None:
            raise ConfigError("bounds with --instance needs --horizon")
        agents = [args.agent] if args.agent is not None else list(instance.agents)
        reports = [
            ucbd4_bound(instance, structure, j, args.gamma, args.beta, args.horizon)
            for j in agents
        ]
        payload = {
            "horizon": args.horizon,
            "agents": [dataclasses.asdict(r) for r in reports],
        }
    else:
        for flag in ("n", "k", "delta_min"):
            if getattr(args, flag) is None:
                raise ConfigError(f"bounds needs --{flag.replace('_', '-')} (or --instance)")
        i1, i2, i_star = ucbd4_constants(args.n, args.k, args.delta_min, args.gamma, args.beta)
        payload = {"i1": i1, "i2": i2, "i_star": i_star}

    if args.format == "json":
        print(json.dumps(payload, indent=2))
    elif "i1" in payload:
        print(f"i1={payload['i1']} i2={payload['i2']} i_star={payload['i_star']}")
    elif args.algo == "etc":
        print(
            "etc bound terms: "
            f"explore={payload['explore_term']!r} "
            f"convergence={payload['convergence_term']!r} "
            f"transient={payload['transient_term']!r} "
            f"tail={payload['tail_term']!r}"
        )
    else:
        for rep in payload["agents"]:
            print(
                f"agent {rep['agent']}: suboptimal={rep['suboptimal_term']:.3f} "
                f"collision={rep['collision_term']:.3f} "
                f"communication={rep['communication_term']:.3f} "
                f"i1={rep['i1']} i2={rep['i2']} i_star={rep['i_star']} "
                f"f_alpha={rep['f_alpha']}"
            )
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    from .plotting import render_from_plot_data

    for f in render_from_plot_data(args.data, args.out):
        print(f"wrote {f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchbandits",
        description="Decentralized matching-market bandit simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random instance file")
    g.add_argument("--spec", required=True, help="generator spec (TOML)")
    g.add_argument("--out", required=True, help="output instance file")
    g.add_argument("--seed", type=int, default=None, help="override the spec seed")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("check", help="report which structural conditions hold")
    c.add_argument("instance", help="instance file")
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("run", help="run a configured experiment")
    r.add_argument("--config", required=True, help="experiment config (TOML)")
    r.add_argument("--seed", type=int, default=None, help="override the master seed")
    r.add_argument("--out", default=None, help="override the output directory")
    r.add_argument("--workers", type=int, default=None, help="override worker count")
    r.add_argument("--plot", action="store_true", help="also render PNG figures")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bounds", help="evaluate the closed-form regret bounds")
    b.add_argument("--algo", choices=("ucbd4", "etc"), default="ucbd4")
    b.add_argument("--n", type=int, default=None, help="number of agents")
    b.add_argument("--k", type=int, default=None, help="number of arms")
    b.add_argument("--delta-min", dest="delta_min", type=float, default=None)
    b.add_argument("--gamma", type=float, default=2.0)
    b.add_argument("--beta", type=lambda s: parse_fraction(s, "--beta"), default=None)
    b.add_argument("--horizon", type=int, default=None)
    b.add_argument("--instance", default=None, help="instance file for a full report")
    b.add_argument("--agent", type=int, default=None, help="restrict the report to one agent")
    b.add_argument("--gap", type=float, default=None, help="ETC: minimum all-pairs gap")
    b.add_argument("--epsilon", type=float, default=None, help="ETC exploration exponent")
    b.add_argument("--format", choices=("text", "json"), default="text")
    b.set_defaults(func=cmd_bounds)

    p = sub.add_parser("plot", help="render figures from a plot-data CSV")
    p.add_argument("--data", required=True, help="plot_data.csv from a run")
    p.add_argument("--out", required=True, help="directory for the PNG files")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bounds" and args.beta is None:
            args.beta = 1.0 / (2 * args.k) if args.k else None
            if args.beta is None and args.algo == "ucbd4" and args.instance is not None:
                inst = load_instance(args.instance)
                args.beta = 1.0 / (2 * inst.n_arms)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (CapacityError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
