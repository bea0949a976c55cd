"""Saddle points of singular-controller-vs-stopper games for phase-type Levy models."""

from .costs import Affine, GameCosts, GeneralGameCosts
from .errors import (
    AssumptionError,
    ConfigError,
    DomainError,
    KinkTooClose,
    LevySaddleError,
    NoBracket,
    RepeatedRoots,
    SingularResolvent,
    ToleranceNotMet,
)
from .model import (
    LevyModelSpec,
    PhaseTypeDist,
    RootSet,
    Side,
    find_roots,
    laplace_exponent,
    matrix_exp,
    mean_drift,
    model_from_dict,
    model_to_dict,
    phase_density,
)
from .scale import ScaleFunctionRep, scale_rep
from .sn import SnEquilibrium, j_ab, solve_sn, value_sn, value_sn_prime
from .sp import (
    SpCase,
    SpEquilibrium,
    j_ab_sp,
    solve_sp,
    thresholds,
    upsilon_at_B,
    value_sp,
    value_sp_prime,
    value_sp_second,
)

__all__ = [
    "Affine",
    "AssumptionError",
    "ConfigError",
    "DomainError",
    "GameCosts",
    "GeneralGameCosts",
    "KinkTooClose",
    "LevyModelSpec",
    "LevySaddleError",
    "NoBracket",
    "PhaseTypeDist",
    "RepeatedRoots",
    "RootSet",
    "ScaleFunctionRep",
    "Side",
    "SingularResolvent",
    "SnEquilibrium",
    "SpCase",
    "SpEquilibrium",
    "ToleranceNotMet",
    "find_roots",
    "j_ab",
    "j_ab_sp",
    "laplace_exponent",
    "matrix_exp",
    "mean_drift",
    "model_from_dict",
    "model_to_dict",
    "phase_density",
    "scale_rep",
    "solve_sn",
    "solve_sp",
    "thresholds",
    "upsilon_at_B",
    "value_sn",
    "value_sn_prime",
    "value_sp",
    "value_sp_prime",
    "value_sp_second",
]

__version__ = "0.1.0"
