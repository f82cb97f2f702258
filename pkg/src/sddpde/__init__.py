"""Mild solutions of parabolic equations with a state-dependent Stieltjes delay term."""
from .delay_term import BirthFunction, eval_F, eval_F_c, eval_F_d, lipschitz_constant_Fc
from .history import HistorySegment, eval_at, extend_flat, segment_norm, shift_append
from .measure import (
    GeneratingMeasure,
    ac_integrate,
    default_measure,
    discrete_integrate,
    singular_integrate,
    stieltjes_integrate,
    total_variation,
    variation_distance_c,
)
from .problem import Problem, nicholson_problem
from .solver import SolverConfig, TrajectoryRecord, chain_by_ignoring, integrate, step
from .spatial import (
    DomainConfig,
    Kernel,
    SpatialOperator,
    SpectralField,
    fractional_norm,
    kernel_convolve,
    phi1,
    semigroup_apply,
)

__version__ = "0.1.0"

__all__ = [
    "BirthFunction",
    "eval_F",
    "eval_F_c",
    "eval_F_d",
    "lipschitz_constant_Fc",
    "HistorySegment",
    "eval_at",
    "extend_flat",
    "segment_norm",
    "shift_append",
    "GeneratingMeasure",
    "ac_integrate",
    "default_measure",
    "discrete_integrate",
    "singular_integrate",
    "stieltjes_integrate",
    "total_variation",
    "variation_distance_c",
    "Problem",
    "nicholson_problem",
    "SolverConfig",
    "TrajectoryRecord",
    "chain_by_ignoring",
    "integrate",
    "step",
    "DomainConfig",
    "Kernel",
    "SpatialOperator",
    "SpectralField",
    "fractional_norm",
    "kernel_convolve",
    "phi1",
    "semigroup_apply",
]
