"""Render the aggregate regret curves to PNG files next to the CSV output.

Figures mirror the delimited data: a max-over-agents comparison across
algorithms with interquartile bands, a collision-regret comparison, and one
per-agent panel figure per algorithm.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .regret import AggregateCurve

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


def _style(ax, title: str, ylabel: str) -> None:
    ax.set_xscale("log")
    ax.set_xlabel("round")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)


def render_figures(
    curves: dict[str, AggregateCurve], out_dir: str | Path, run_id: str = "run"
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, (name, c) in enumerate(curves.items()):
        color = _COLORS[i % len(_COLORS)]
        ax.plot(c.checkpoints, c.max_mean, label=name, color=color)
        ax.fill_between(c.checkpoints, c.max_q25, c.max_q75, color=color, alpha=0.2)
    _style(ax, f"{run_id}: max-agent regret (mean, 25-75%)", "cumulative regret")
    ax.legend()
    path = out / "regret_max_agent.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, (name, c) in enumerate(curves.items()):
        color = _COLORS[i % len(_COLORS)]
        ax.plot(c.checkpoints, c.collision_mean.max(axis=1), label=name, color=color)
    _style(ax, f"{run_id}: max-agent collision regret (mean)", "collision regret")
    ax.legend()
    path = out / "collision_regret.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    for name, c in curves.items():
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for a in range(c.n_agents):
            color = _COLORS[a % len(_COLORS)]
            ax.plot(c.checkpoints, c.mean[:, a], label=f"agent {a + 1}", color=color)
            ax.fill_between(c.checkpoints, c.q25[:, a], c.q75[:, a], color=color, alpha=0.15)
        _style(ax, f"{run_id}: {name} per-agent regret", "cumulative regret")
        ax.legend(fontsize=8)
        path = out / f"regret_agents_{name}.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def render_from_plot_data(data_file: str | Path, out_dir: str | Path) -> list[Path]:
    """Rebuild comparison figures from a written plot_data.csv."""
    import csv

    rows = list(csv.DictReader(Path(data_file).open()))
    if not rows:
        raise ValueError(f"no rows in {data_file}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    algorithms = sorted({r["algorithm"] for r in rows})
    for i, name in enumerate(algorithms):
        series = [r for r in rows if r["algorithm"] == name and r["agent"] == "max"]
        if not series:  # plain aggregate file: fall back to the worst agent
            agents = sorted(
                {r["agent"] for r in rows if r["algorithm"] == name}, key=int
            )
            per_agent = {
                a: [r for r in rows if r["algorithm"] == name and r["agent"] == a]
                for a in agents
            }
            series = max(per_agent.values(), key=lambda s: float(s[-1]["mean"]))
        ts = [int(r["t"]) for r in series]
        color = _COLORS[i % len(_COLORS)]
        ax.plot(ts, [float(r["mean"]) for r in series], label=name, color=color)
        ax.fill_between(
            ts,
            [float(r["q25"]) for r in series],
            [float(r["q75"]) for r in series],
            color=color,
            alpha=0.2,
        )
    _style(ax, "max-agent regret (mean, 25-75%)", "cumulative regret")
    ax.legend()
    path = out / "regret_max_agent.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return [path]
