"""Decentralized two-sided matching-market bandit simulator.

Markets pair N learning agents with K >= N arms that know their preferences;
each round every agent proposes to one arm and the arm keeps its favourite
proposer. The package provides the market model, stable-matching tooling,
structural-condition checkers (serial dictatorship / SPC / alpha /
uniqueness consistency), instance generators, five learning protocols,
regret accounting with closed-form bound evaluators, and a reproducible
experiment harness with CSV and figure output.
"""

from .core import (
    GapSummary,
    Instance,
    InstanceStructure,
    Matching,
    gap_summary,
    instance_from_text,
    instance_structure,
    instance_to_text,
    load_instance,
    save_instance,
)
from .conditions import (
    OrderCertificate,
    check_alpha,
    check_serial_dictatorship,
    check_spc,
    check_unqc_brute,
    structure_from_alpha,
)
from .env import Observation, PlayProfile, Regime, RoundOutcome, resolve_round, sample_rewards
from .errors import CapacityError, ConfigError, GenerationError, ProtocolViolationError
from .gen import GenSpec, generate_instance
from .harness import (
    AlgorithmSpec,
    ExperimentConfig,
    ExperimentResult,
    load_config,
    run_experiment,
    run_trial,
)
from .policies import (
    CaUcbPolicy,
    EtcPolicy,
    PhaseSchedule,
    UcbCState,
    UcbD3Policy,
    UcbD4Policy,
    ucb_index,
    ucbc_round,
)
from .regret import (
    AggregateCurve,
    RegretLedger,
    aggregate,
    etc_bound,
    ucbd4_bound,
    ucbd4_constants,
)
from .stable import BlockingPair, StableSet, blocking_pairs, enumerate_stable, gale_shapley

__version__ = "0.1.0"
