from __future__ import annotations

import math

import numpy as np
import pytest

from matchbandits.core import Instance
from matchbandits.env import Regime, make_observations, play_round
from matchbandits.errors import ProtocolViolationError
from matchbandits.policies import (
    CaUcbPolicy,
    EtcPolicy,
    PhaseSchedule,
    RankingProtocol,
    RejectionDance,
    UcbCState,
    UcbD3Policy,
    UcbD4Policy,
    ucb_index,
    ucbc_round,
)
from matchbandits.stable import gale_shapley
from conftest import make_ex1, random_instance


def drive(instance, policies, t_range, rng, regime=Regime.FULL_DECENTRALIZED):
    """Run the round loop, returning the play/blocked trajectory."""
    trajectory = []
    for t in t_range:
        plays = {j: policies[j - 1].act(t) for j in instance.agents}
        outcome = play_round(instance, plays, rng)
        obs = make_observations(outcome, regime, instance.agents)
        for j in instance.agents:
            policies[j - 1].update(t, obs[j])
        trajectory.append((plays, outcome.blocked))
    return trajectory


# -- ucb index -------------------------------------------------------------


def test_ucb_index_unplayed_is_infinite():
    assert ucb_index(0.0, 0, 5, 2.0) == math.inf


def test_ucb_index_arithmetic():
    assert ucb_index(0.5, 4, 7, 2.0) == pytest.approx(0.5 + math.sqrt(math.log(7)), abs=1e-12)


def test_ucb_index_monotonicity():
    vals_n = [ucb_index(0.3, n, 100, 2.0) for n in (1, 5, 50, 5000)]
    assert vals_n == sorted(vals_n, reverse=True)
    vals_t = [ucb_index(0.3, 10, t, 2.0) for t in (2, 10, 1000)]
    assert vals_t == sorted(vals_t)
    assert ucb_index(0.3, 10**9, 100, 2.0) == pytest.approx(0.3, abs=1e-3)


# -- phase schedule ----------------------------------------------------------


def test_schedule_block_lengths():
    s = PhaseSchedule(n_agents=3, n_arms=4)
    assert s.ranking_len == 3
    assert s.comm_len == 12
    assert [s.regular_len(i) for i in (1, 2, 3)] == [2, 4, 8]
    assert s.phase_start(1) == 4  # R + 1
    assert s.phase_start(2) == s.phase_start(1) + s.regular_len(1) + s.comm_len


def test_schedule_tuned_lengths():
    s = PhaseSchedule(n_agents=11, n_arms=15, c0=1.2, c1=3.0, tuned=True)
    assert s.regular_len(1) == 10 * 15 + max(1, int(3 * 1.2))
    assert s.etc_phase_len(0) == 3


# -- index estimation --------------------------------------------------------


def ranking_indices(instance, seed=0):
    n = instance.n_agents
    protocols = [RankingProtocol(n) for _ in instance.agents]
    rng = np.random.default_rng(seed)
    for t in range(1, n + 1):
        plays = {j: protocols[j - 1].act(t) for j in instance.agents}
        outcome = play_round(instance, plays, rng)
        obs = make_observations(outcome, Regime.FULL_DECENTRALIZED, instance.agents)
        for j in instance.agents:
            protocols[j - 1].update(t, obs[j])
    return [p.index for p in protocols]


def test_index_estimation_three_agents(ex1):
    # arm 1 prefers a > b > c
    assert ranking_indices(ex1) == [1, 2, 3]


def test_index_estimation_reversed_rank():
    inst = Instance(
        2, 2, np.array([[0.6, 0.2], [0.7, 0.3]]), ((2, 1), (1, 2))
    )  # arm 1 prefers agent 2
    assert ranking_indices(inst) == [2, 1]


def test_index_estimation_single_agent():
    inst = Instance(1, 2, np.array([[0.4, 0.6]]), ((1,), (1,)))
    assert ranking_indices(inst) == [1]


def test_index_estimation_matches_rank_at_arm_one():
    rng = np.random.default_rng(99)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(n, 7))
        inst = random_instance(n, k, rng)
        expect = [inst.arm_rank(1, j) + 1 for j in inst.agents]
        assert ranking_indices(inst, seed=int(rng.integers(1 << 31))) == expect


# -- phased ETC ----------------------------------------------------------------


def test_etc_explore_formula_spec_example():
    pol = EtcPolicy(n_agents=5, n_arms=6, epsilon=0.2)
    pol.ranking.index = 2
    assert pol.act(1025) == 4  # phase 10, offset 2 <= 6: explore slot
    assert pol._last == ("explore", 4)
    pol2 = EtcPolicy(n_agents=5, n_arms=6, epsilon=0.2)
    pol2.ranking.index = 2
    pol2.act(1031)
    assert pol2._last[0] == "exploit"


def test_etc_residue_wraps_to_last_arm():
    pol = EtcPolicy(n_agents=2, n_arms=2, epsilon=1.0)
    pol.ranking.index = 1
    # t=5: phase 2 starts at 4, offset 1, budget K*floor(2^1)=4 -> explore
    # residue (5 + 1 - 4 + 1) mod 2 = 1 -> arm 1; index 2 gives 0 -> arm K
    assert pol.act(5) == 1
    pol2 = EtcPolicy(n_agents=2, n_arms=2, epsilon=1.0)
    pol2.ranking.index = 2
    assert pol2.act(5) == 2


def test_etc_exploration_collision_free(ex1):
    policies = [EtcPolicy(3, 3, epsilon=0.5) for _ in ex1.agents]
    rng = np.random.default_rng(3)
    traj = drive(ex1, policies, range(1, 600), rng)
    for t0, (plays, blocked) in enumerate(traj, start=1):
        modes = {policies[j - 1]._last[0] for j in ex1.agents}
        if t0 > 3 and "explore" in modes:
            assert modes == {"explore"}  # agents stay in lockstep
            assert not blocked
            assert len(set(plays.values())) == 3


def test_etc_explore_counts_only_explore_samples(ex1):
    policies = [EtcPolicy(3, 3, epsilon=0.5) for _ in ex1.agents]
    rng = np.random.default_rng(4)
    drive(ex1, policies, range(1, 50), rng)
    # ranking rounds matched some agents but must not have fed the estimators
    explore_rounds = sum(policies[0].counts)
    assert explore_rounds > 0
    total_explores = 0
    pol = EtcPolicy(3, 3, epsilon=0.5)
    for t in range(4, 50):
        pol.act(t)
        if pol._last[0] == "explore":
            total_explores += 1
        pol.update(t, type("O", (), {"matched": True, "reward": 0.0})())
    assert explore_rounds == total_explores


def test_etc_update_raises_on_explore_collision():
    pol = EtcPolicy(n_agents=2, n_arms=2, epsilon=1.0)
    pol.act(5)  # explore round (see above)
    from matchbandits.env import Observation

    with pytest.raises(ProtocolViolationError):
        pol.update(5, Observation(False, None, None, False))


def test_rejection_dance_blocked_proposes_next():
    dance = RejectionDance([0.2, 0.9, 0.5])
    assert dance.act() == 2
    dance.on_block(2)
    assert dance.act() == 3
    dance.on_block(3)
    assert dance.act() == 1


def test_exploit_with_true_means_reaches_stable_fixed_point():
    """Rejection dances loaded with the true means settle on the stable
    matching, block-free, within N*N rounds."""
    rng = np.random.default_rng(21)
    for _ in range(30):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(n, 6))
        inst = random_instance(n, k, rng)
        dances = [RejectionDance(inst.means[j - 1]) for j in inst.agents]
        stable = gale_shapley(inst)
        converged_at = None
        for rounds in range(1, n * n + 1):
            plays = {j: dances[j - 1].act() for j in inst.agents}
            from matchbandits.env import resolve_round

            matching, blocked = resolve_round(inst, plays)
            for j in blocked:
                dances[j - 1].on_block(plays[j])
            if not blocked:
                converged_at = rounds
                assert matching == stable
                break
        assert converged_at is not None and converged_at <= n * n


# -- UCB-D4 ------------------------------------------------------------------


def test_d4_local_deletion_threshold_arithmetic():
    pol = UcbD4Policy(n_agents=5, n_arms=6, gamma=2.0, beta=1 / 12)
    pol._start_regular(5)
    assert pol._threshold == 3  # ceil(32 / 12)


def test_d4_schedule_transitions(ex1):
    policies = [UcbD4Policy(3, 3) for _ in ex1.agents]
    rng = np.random.default_rng(5)
    sched = policies[0].schedule
    drive(ex1, policies, range(1, sched.phase_start(3)), rng)
    # after ranking(3) + reg(2) + comm(9) + reg(4) + comm(9) = S_3 - 1 rounds
    assert all(p.phase == 3 and p._mode == "regular" for p in policies)
    assert all(p._remaining == sched.regular_len(3) for p in policies)


def test_d4_communication_scan_hand_example():
    """2x2 market from first principles: each agent's scan collides exactly
    on the arm the other broadcasts and ranks them below."""
    inst = Instance(
        2, 2, np.array([[0.6, 0.2], [0.3, 0.7]]), ((1, 2), (2, 1))
    )  # arm 1 prefers agent 1; arm 2 prefers agent 2
    pols = [UcbD4Policy(2, 2), UcbD4Policy(2, 2)]
    for p, idx, o in zip(pols, (1, 2), (1, 2)):
        p.ranking.index = idx
        p.block_matches[o - 1] = 1
        p._finish_regular()
    rng = np.random.default_rng(0)
    drive(inst, pols, range(10, 10 + 4), rng)  # NK = 4 communication rounds
    assert pols[0].globally_deleted == frozenset({2})
    assert pols[1].globally_deleted == frozenset({1})
    assert all(p._mode == "regular" and p.phase == 1 for p in pols)


def test_d4_communication_scan_oracle_random():
    """Scan result equals {O_j' : j' above j at arm O_j'} on random setups.

    Ids must be the ranks at arm 1, as the ranking protocol guarantees: the
    rank-1 agent's scan slot skips arm 1, which is sound only because nobody
    outranks it there.
    """
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(n, 6))
        inst = random_instance(n, k, rng)
        most_matched = {j: int(rng.integers(1, k + 1)) for j in inst.agents}
        pols = []
        for j in inst.agents:
            p = UcbD4Policy(n, k)
            p.ranking.index = inst.arm_rank(1, j) + 1
            p.block_matches[most_matched[j] - 1] = 1
            p._finish_regular()
            pols.append(p)
        drive(inst, pols, range(50, 50 + n * k), rng)
        for j in inst.agents:
            oracle = frozenset(
                most_matched[j2]
                for j2 in inst.agents
                if j2 != j and inst.prefers(most_matched[j2], j2, j)
            )
            assert pols[j - 1].globally_deleted == oracle, (n, k, most_matched)


def test_d4_most_matched_fallback_is_last_play():
    pol = UcbD4Policy(2, 3)
    pol._start_regular(1)
    pol._last_arm = 3
    pol._finish_regular()
    assert pol.most_matched == 3


def test_d4_active_set_reset_anomaly():
    pol = UcbD4Policy(2, 2, beta=0.4)
    pol._start_regular(1)  # threshold ceil(0.8) = 1: one collision deletes
    from matchbandits.env import Observation

    blocked_obs = Observation(False, None, None, False)
    pol.act(4)
    pol.update(4, blocked_obs)
    pol.act(5)
    pol.update(5, blocked_obs)
    assert pol.anomalies == 1
    assert set(pol.active) == {1, 2}


def test_d3_is_d4_without_local_deletion(ex_a):
    seeds = np.random.default_rng(17)
    s1, s2 = int(seeds.integers(1 << 30)), None
    d4 = [UcbD4Policy(3, 3, local_deletion=False) for _ in ex_a.agents]
    d3 = [UcbD3Policy(3, 3) for _ in ex_a.agents]
    t1 = drive(ex_a, d4, range(1, 500), np.random.default_rng(s1))
    t2 = drive(ex_a, d3, range(1, 500), np.random.default_rng(s1))
    assert t1 == t2


# -- UCB-C ---------------------------------------------------------------------


def test_ucbc_round_one_tiebreak(ex1):
    states = {j: UcbCState(3) for j in ex1.agents}
    rng = np.random.default_rng(0)
    assert states[1].ranked_arms(1) == (1, 2, 3)  # all infinite: smallest ids
    matching = ucbc_round(states, 1, ex1, rng)
    assert len(matching) == 3  # everyone assigned, no collision


def test_ucbc_no_collisions_and_converged_fixed_point(ex1):
    states = {j: UcbCState(3) for j in ex1.agents}
    rng = np.random.default_rng(1)
    for t in range(1, 50):
        matching = ucbc_round(states, t, ex1, rng)
        assert len(matching) == ex1.n_agents  # no collision regret, ever
    # inject exact means: the assignment must equal the stable matching
    for j in ex1.agents:
        states[j].counts = [10**9] * 3
        states[j].sums = [m * 10**9 for m in ex1.means[j - 1]]
    assert ucbc_round(states, 10**6, ex1, rng) == gale_shapley(ex1)


# -- CA-UCB ----------------------------------------------------------------------


def test_caucb_lambda_one_repeats_first_arm(ex1):
    pols = [CaUcbPolicy(j, ex1, lam=1.0, rng=np.random.default_rng(j)) for j in ex1.agents]
    rng = np.random.default_rng(2)
    traj = drive(ex1, pols, range(1, 30), rng, regime=Regime.PARTIAL)
    first = traj[0][0]
    for plays, _ in traj[1:]:
        assert plays == first


def test_caucb_matched_argmax_plays_same_arm(ex1):
    """When the previous arm matched and still tops the plausible set, both
    coin branches agree."""
    pol = CaUcbPolicy(1, ex1, lam=0.5, rng=np.random.default_rng(3))
    rng = np.random.default_rng(4)
    pols = [pol] + [
        CaUcbPolicy(j, ex1, lam=0.5, rng=np.random.default_rng(10 + j)) for j in (2, 3)
    ]
    drive(ex1, pols, range(1, 5), rng, regime=Regime.PARTIAL)
    pol.counts = [50, 5, 5]
    pol.sums = [50.0, 0.5, 0.5]  # arm 1 clearly tops the UCB indices
    from matchbandits.core import Matching

    pol._prev_matching = Matching(((1, 1), (2, 2), (3, 3)))
    pol._prev_attempt = 1
    assert pol.act(6) == 1


def test_caucb_plausible_set_rules(ex1):
    from matchbandits.core import Matching

    pol = CaUcbPolicy(2, ex1, lam=0.0, rng=np.random.default_rng(5))
    pol._prev_matching = Matching(((1, 1), (2, 2)))  # arm 3 free, arm 1 held by a
    plausible = pol.plausible_set()
    # arm 1: held by agent 1 whom arm 1 prefers over b -> excluded
    # arm 2: matched to us -> included; arm 3: free -> included
    assert plausible == [2, 3]


def test_caucb_requires_partial_feedback(ex1):
    pol = CaUcbPolicy(1, ex1, rng=np.random.default_rng(6))
    pol.act(1)
    from matchbandits.env import Observation

    with pytest.raises(Exception):
        pol.update(1, Observation(True, 1.0, None, False))
