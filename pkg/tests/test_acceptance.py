"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 5 and 8 drive full experiment campaigns and dominate the runtime
(minutes and tens of minutes respectively); deselect with -m "not slow" for
quick iterations.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from matchbandits.conditions import check_alpha, check_spc, check_unqc_brute
from matchbandits.core import Instance, gap_summary, save_instance
from matchbandits.env import Regime, make_observations, play_round, resolve_round
from matchbandits.gen import GenSpec, generate_instance
from matchbandits.harness import AlgorithmSpec, ExperimentConfig, run_experiment
from matchbandits.policies import EtcPolicy, RankingProtocol, RejectionDance, UcbD4Policy
from matchbandits.regret import etc_bound, ucbd4_constants
from matchbandits.stable import blocking_pairs, enumerate_stable, gale_shapley
from conftest import random_instance

A, B, C = 1, 2, 3

# EX1-structured deadlock market (arms 1, 2 share a common order, arm 3 ranks
# the last two agents in reverse): agents b and c can starve each other out
# of their stable arms. Equal stable-arm means keep the deadlock cost
# symmetric; the minimum positive gap is 0.07.
DEADLOCK_MEANS = np.array(
    [
        [0.95, 0.55, 0.15],  # a: 1 > 2 > 3
        [0.78, 0.85, 0.73],  # b: 2 > 1 > 3
        [0.59, 0.54, 0.84],  # c: 3 > 1 > 2
    ]
)
DEADLOCK_PREFS = ((A, B, C), (A, B, C), (A, C, B))


def report(num: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num} failed: {detail}"


def test_criterion_1_gale_shapley_oracle_equivalence():
    rng = np.random.default_rng(1001)
    checked = 0
    ok = True
    while checked < 200:
        n = int(rng.integers(1, 5))
        k = int(rng.integers(n, 5))
        inst = random_instance(n, k, rng)
        ss = enumerate_stable(inst)
        gs = gale_shapley(inst)
        ok = ok and gs in ss.matchings and gs == ss.agent_optimal
        checked += 1
    report(1, ok, f"gale_shapley = agent-optimal enumeration element on {checked} instances")


def test_criterion_2_alpha_iff_uniqueness_consistency():
    rng = np.random.default_rng(1002)
    checked = 0
    agree = True
    holds = 0
    while checked < 200:
        n = int(rng.integers(2, 4))  # N = K in {2, 3}
        inst = random_instance(n, n, rng)
        alpha = check_alpha(inst) is not None
        unqc = check_unqc_brute(inst)
        agree = agree and (alpha == unqc)
        holds += alpha
        checked += 1
    report(2, agree and 0 < holds < checked,
           f"check_alpha <=> brute UnqC on {checked} square markets ({holds} positive)")


def test_criterion_3_spc_generator_implication_chain():
    rng = np.random.default_rng(1003)
    ok = True
    count = 0
    for seed in range(60):
        n = int(rng.integers(2, 6))
        k = int(rng.integers(n, 7))
        inst = generate_instance(GenSpec(n, k, kind="spc", seed=seed))
        cert = check_spc(inst)
        ok = ok and cert is not None and check_alpha(inst) is not None
        if cert is not None:
            stable = gale_shapley(inst)
            ok = ok and all(
                stable.arm_of(cert.agent_order[pos]) == cert.arm_order[pos]
                for pos in range(n)
            )
        count += 1
    report(3, ok, f"{count} generated SPC instances pass check_spc/check_alpha with k*_j = j")


def test_criterion_4_protocol_micro_oracles():
    rng = np.random.default_rng(1004)

    # (a) index estimation returns each agent's rank at arm 1
    ok_index = True
    for _ in range(100):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(n, 7))
        inst = random_instance(n, k, rng)
        protocols = [RankingProtocol(n) for _ in inst.agents]
        for t in range(1, n + 1):
            plays = {j: protocols[j - 1].act(t) for j in inst.agents}
            outcome = play_round(inst, plays, rng)
            obs = make_observations(outcome, Regime.FULL_DECENTRALIZED, inst.agents)
            for j in inst.agents:
                protocols[j - 1].update(t, obs[j])
        ok_index = ok_index and all(
            protocols[j - 1].index == inst.arm_rank(1, j) + 1 for j in inst.agents
        )

    # (b) communication scan returns {O_j' : j' above j at arm O_j'}
    ok_scan = True
    for _ in range(100):
        n = int(rng.integers(2, 6))
        k = int(rng.integers(n, 7))
        inst = random_instance(n, k, rng)
        most = {j: int(rng.integers(1, k + 1)) for j in inst.agents}
        pols = []
        for j in inst.agents:
            p = UcbD4Policy(n, k)
            p.ranking.index = inst.arm_rank(1, j) + 1
            p.block_matches[most[j] - 1] = 1
            p._finish_regular()
            pols.append(p)
        for t in range(100, 100 + n * k):
            plays = {j: pols[j - 1].act(t) for j in inst.agents}
            outcome = play_round(inst, plays, rng)
            obs = make_observations(outcome, Regime.FULL_DECENTRALIZED, inst.agents)
            for j in inst.agents:
                pols[j - 1].update(t, obs[j])
        for j in inst.agents:
            oracle = frozenset(
                most[j2] for j2 in inst.agents
                if j2 != j and inst.prefers(most[j2], j2, j)
            )
            ok_scan = ok_scan and pols[j - 1].globally_deleted == oracle

    # (c) full ETC runs have collision-free exploration
    ok_etc = True
    for seed in (0, 1):
        inst = generate_instance(GenSpec(5, 6, kind="general", seed=seed))
        pols = [EtcPolicy(5, 6, epsilon=0.2) for _ in inst.agents]
        env_rng = np.random.default_rng(seed)
        for t in range(1, 4000):
            plays = {j: pols[j - 1].act(t) for j in inst.agents}
            outcome = play_round(inst, plays, env_rng)
            modes = {pols[j - 1]._last[0] for j in inst.agents}
            if "explore" in modes:
                ok_etc = ok_etc and not outcome.blocked
            obs = make_observations(outcome, Regime.FULL_DECENTRALIZED, inst.agents)
            for j in inst.agents:
                pols[j - 1].update(t, obs[j])  # raises on explore collision too
    report(4, ok_index and ok_scan and ok_etc,
           "index estimation (100 markets), communication scan (100 configs), "
           "collision-free ETC exploration")


@pytest.mark.slow
def test_criterion_5_ucbd4_sublinear_ucbd3_linear(tmp_path):
    inst = Instance(3, 3, DEADLOCK_MEANS, DEADLOCK_PREFS)
    assert check_spc(inst) is not None  # EX1-style: SPC but not serial dictatorship
    gs = gap_summary(inst, gale_shapley(inst))
    assert gs.delta_min >= 0.05
    path = tmp_path / "deadlock.txt"
    save_instance(inst, path)
    horizon = 2**17
    cfg = ExperimentConfig(
        algorithms=(
            AlgorithmSpec("ucbd4", {"gamma": 2.0, "beta": 1.0 / 6}),
            AlgorithmSpec("ucbd3", {"gamma": 2.0}),
        ),
        horizon=horizon,
        trials=50,
        instance_file=str(path),
        checkpoints=(horizon // 4, horizon // 2, horizon),
        master_seed=20260809,
        workers=2,
        out_dir=str(tmp_path / "out"),
    )
    result = run_experiment(cfg, write=False)
    rho = {}
    for name in ("ucbd4", "ucbd3"):
        m = result.curves[name].max_mean
        rho[name] = (m[2] - m[1]) / (m[1] - m[0])
    ok = rho["ucbd4"] <= 1.5 and rho["ucbd3"] >= 1.7
    report(5, ok, f"increment ratios: ucbd4 {rho['ucbd4']:.3f} <= 1.5, "
                  f"ucbd3 {rho['ucbd3']:.3f} >= 1.7 (50 trials, T=2^17)")


def test_criterion_6_ucbc_collision_free(tmp_path):
    cfg = ExperimentConfig(
        algorithms=(AlgorithmSpec("ucbc"),),
        horizon=2000,
        trials=10,
        genspec=GenSpec(4, 5, kind="general", seed=3),
        checkpoint_count=12,
        master_seed=21,
        out_dir=str(tmp_path / "out"),
    )
    result = run_experiment(cfg, write=False)
    ok = all(
        np.all(trial.collision["ucbc"] == 0.0) for trial in result.trials
    )
    report(6, ok, "centralized UCB collision-regret series identically zero")


def test_criterion_7_exploit_converges_to_stable_within_n_squared():
    rng = np.random.default_rng(1007)
    ok = True
    for _ in range(100):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(n, 7))
        inst = random_instance(n, k, rng)
        stable = gale_shapley(inst)
        dances = [RejectionDance(inst.means[j - 1]) for j in inst.agents]
        converged = False
        for _round in range(1, n * n + 1):
            plays = {j: dances[j - 1].act() for j in inst.agents}
            matching, blocked = resolve_round(inst, plays)
            if not blocked:
                converged = matching == stable
                break
            for j in blocked:
                dances[j - 1].on_block(plays[j])
        ok = ok and converged
    report(7, ok, "true-mean exploit dance reaches the stable matching "
                  "block-free within N^2 rounds on 100 markets")


@pytest.mark.slow
def test_criterion_8_figure_shape_ucbd4_beats_caucb():
    horizon = 100_000
    wins = 0
    scores = []
    for seed in range(1, 11):
        cfg = ExperimentConfig(
            algorithms=(AlgorithmSpec("ucbd4"), AlgorithmSpec("caucb")),
            horizon=horizon,
            trials=50,
            genspec=GenSpec(5, 6, kind="alpha", seed=seed),
            checkpoints=(horizon,),
            master_seed=909,
            workers=2,
        )
        result = run_experiment(cfg, write=False)
        d4 = float(result.curves["ucbd4"].max_mean[-1])
        ca = float(result.curves["caucb"].max_mean[-1])
        wins += d4 < ca
        scores.append(f"seed {seed}: {d4:.0f} vs {ca:.0f}")
    ok = wins >= 8
    report(8, ok, f"ucbd4 beats ca-ucb on {wins}/10 alpha instances "
                  f"(need >= 8); " + "; ".join(scores))


def test_criterion_9_bound_evaluators():
    constants = ucbd4_constants(5, 6, 0.05, 2.0, 1.0 / 12)
    ok_const = constants == (25, 1, 25)
    r = etc_bound(horizon=4, n_agents=1, n_arms=1, gap=0.5, epsilon=1.0)
    ok_etc = (
        abs(r.explore_term - 8.0) <= 1e-12 * 8.0
        and abs(r.convergence_term - 8.0) <= 1e-12 * 8.0
        and abs(r.tail_term - math.e / (math.e - 2.0)) <= 1e-12 * r.tail_term
    )
    report(9, ok_const and ok_etc,
           f"ucbd4 constants {constants} == (25, 1, 25); etc terms (8, 8, e/(e-2)) "
           "within 1e-12 relative")


def test_criterion_10_worker_count_determinism(tmp_path):
    def run(workers: int, out: str):
        cfg = ExperimentConfig(
            algorithms=(AlgorithmSpec("ucbd4"), AlgorithmSpec("etc")),
            horizon=400,
            trials=8,
            genspec=GenSpec(3, 4, kind="spc", seed=12),
            checkpoint_count=10,
            master_seed=33,
            workers=workers,
            out_dir=str(tmp_path / out),
        )
        return run_experiment(cfg)

    r1 = run(1, "w1")
    r8 = run(8, "w8")
    same = (tmp_path / "w1" / "aggregate.csv").read_bytes() == (
        tmp_path / "w8" / "aggregate.csv"
    ).read_bytes()
    report(10, same, "aggregate CSV byte-identical for workers in {1, 8}")
