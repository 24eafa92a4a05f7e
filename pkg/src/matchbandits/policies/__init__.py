from .base import PhaseSchedule, RankingProtocol, ucb_index
from .baselines import CaUcbPolicy, UcbCState, ucbc_round
from .etc import EtcPolicy, RejectionDance
from .ucbd4 import UcbD3Policy, UcbD4Policy

__all__ = [
    "PhaseSchedule",
    "RankingProtocol",
    "ucb_index",
    "CaUcbPolicy",
    "UcbCState",
    "ucbc_round",
    "EtcPolicy",
    "RejectionDance",
    "UcbD3Policy",
    "UcbD4Policy",
]
