"""Shared policy machinery: the UCB index, the phase schedule, and the
decentralized rank-estimation protocol run once at the start of the game."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..env import Observation


def ucb_index(mean_hat: float, n: int, t: int, gamma: float) -> float:
    """mean_hat + sqrt(2*gamma*ln(t)/n); +inf for an unplayed arm."""
    if n == 0:
        return math.inf
    return mean_hat + math.sqrt(2.0 * gamma * math.log(t) / n)


@dataclass(frozen=True)
class PhaseSchedule:
    """Block lengths shared by the phased policies.

    The ranking block is N rounds (N-1 protocol rounds plus one buffer
    round). A communication block is N*K rounds (N*K-1 protocol rounds plus
    one idle broadcast round). Regular blocks grow exponentially: by default
    phase i lasts 2^i rounds; the tuned variant uses c1*c0^i, with an extra
    (N-1)*K offset for the communicating policies so early phases are not
    swamped by their communication blocks.
    """

    n_agents: int
    n_arms: int
    c0: float = 2.0
    c1: float = 1.0
    tuned: bool = False

    @property
    def ranking_len(self) -> int:
        return self.n_agents

    @property
    def comm_len(self) -> int:
        return self.n_agents * self.n_arms

    def etc_phase_len(self, i: int) -> int:
        return max(1, int(self.c1 * self.c0**i))

    def regular_len(self, i: int) -> int:
        if not self.tuned:
            return 2**i
        return (self.n_agents - 1) * self.n_arms + max(1, int(self.c1 * self.c0**i))

    def phase_start(self, i: int) -> int:
        """S_i: first round of phase i's regular block (communicating policies)."""
        s = self.ranking_len + 1
        for i2 in range(1, i):
            s += self.regular_len(i2) + self.comm_len
        return s


class RankingProtocol:
    """Estimate a unique id as the round of first match at arm 1.

    Rounds 1..N-1: play arm 1 until matched, then switch to arm 2; the id is
    the matching round (N if never matched). Round N is a buffer that replays
    the current arm so every agent enters the main protocol in lockstep.
    """

    def __init__(self, n_agents: int):
        self.n_agents = n_agents
        self.index = n_agents
        self.arm = 1

    def act(self, t: int) -> int:
        return self.arm

    def update(self, t: int, obs: Observation) -> None:
        if t <= self.n_agents - 1 and obs.matched and self.arm == 1:
            self.index = t
            self.arm = 2
