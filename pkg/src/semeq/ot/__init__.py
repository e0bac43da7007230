"""Optimal transport machinery: couplings, barycentric maps and the joint map solver."""

from ._backend import BACKEND, TransportSimplex
from .core import (
    ConvergenceError,
    LinearMap,
    SampleSet,
    TransportPlan,
    ball_contract,
    barycentric_map,
    cost_matrix,
    solve_ot_entropic,
    solve_ot_exact,
)
from .p1 import (
    P1Config,
    P1Result,
    default_alpha,
    default_beta,
    fit_linear_map,
    solve_p1,
    t_step_gradient,
    t_step_objective,
    write_trace_csv,
)

__all__ = [
    "BACKEND",
    "TransportSimplex",
    "ConvergenceError",
    "LinearMap",
    "SampleSet",
    "TransportPlan",
    "ball_contract",
    "barycentric_map",
    "cost_matrix",
    "solve_ot_entropic",
    "solve_ot_exact",
    "P1Config",
    "P1Result",
    "default_alpha",
    "default_beta",
    "fit_linear_map",
    "solve_p1",
    "t_step_gradient",
    "t_step_objective",
    "write_trace_csv",
]
