"""Shared example markets used across the test suite.

ex1: the 3x3 deadlock market (agents a:1>2>3, b:2>1>3, c:3>1>2; arms
     1:a>b>c, 2:a>b>c, 3:a>c>b). Satisfies SPC but not serial dictatorship;
     stable matching {(a,1),(b,2),(c,3)}.
ex_a: serial dictatorship (all arms a>b>c).
ex_c: no common order (arms 1:b>c>a, 2:b>a>c, 3:b>c>a); satisfies the
      alpha-condition with stable matching {(a,2),(b,1),(c,3)}.
double_stable: the 2x2 market with two stable matchings.
"""

from __future__ import annotations

import numpy as np
import pytest

from matchbandits.core import Instance
from matchbandits.gen import GenSpec, generate_instance

A, B, C = 1, 2, 3


def make_ex1() -> Instance:
    return Instance(
        n_agents=3,
        n_arms=3,
        means=np.array(
            [
                [0.90, 0.80, 0.10],  # a: 1 > 2 > 3
                [0.70, 0.85, 0.20],  # b: 2 > 1 > 3
                [0.60, 0.30, 0.95],  # c: 3 > 1 > 2
            ]
        ),
        arm_prefs=((A, B, C), (A, B, C), (A, C, B)),
    )


def make_ex_a() -> Instance:
    return Instance(
        n_agents=3,
        n_arms=3,
        means=np.array(
            [
                [0.90, 0.60, 0.20],  # a: 1 > 2 > 3
                [0.85, 0.55, 0.15],  # b: 1 > 2 > 3
                [0.50, 0.80, 0.10],  # c: 2 > 1 > 3
            ]
        ),
        arm_prefs=((A, B, C), (A, B, C), (A, B, C)),
    )


def make_ex_c() -> Instance:
    return Instance(
        n_agents=3,
        n_arms=3,
        means=np.array(
            [
                [0.90, 0.70, 0.20],  # a: 1 > 2 > 3
                [0.80, 0.50, 0.10],  # b: 1 > 2 > 3
                [0.40, 0.75, 0.15],  # c: 2 > 1 > 3
            ]
        ),
        arm_prefs=((B, C, A), (B, A, C), (B, C, A)),
    )


def make_double_stable() -> Instance:
    return Instance(
        n_agents=2,
        n_arms=2,
        means=np.array(
            [
                [0.80, 0.30],  # a: 1 > 2
                [0.20, 0.70],  # b: 2 > 1
            ]
        ),
        arm_prefs=((2, 1), (1, 2)),  # arm 1: b > a, arm 2: a > b
    )


def random_instance(n: int, k: int, rng: np.random.Generator) -> Instance:
    """An unconstrained random market (distinct means, random arm orders)."""
    while True:
        means = rng.random((n, k))
        if np.unique(means).size == n * k:
            break
    prefs = tuple(tuple(rng.permutation(n) + 1) for _ in range(k))
    return Instance(n_agents=n, n_arms=k, means=means, arm_prefs=prefs)


@pytest.fixture
def ex1() -> Instance:
    return make_ex1()


@pytest.fixture
def ex_a() -> Instance:
    return make_ex_a()


@pytest.fixture
def ex_c() -> Instance:
    return make_ex_c()


@pytest.fixture
def double_stable() -> Instance:
    return make_double_stable()


@pytest.fixture
def small_alpha_instance() -> Instance:
    return generate_instance(GenSpec(n_agents=3, n_arms=3, kind="alpha", seed=7))
