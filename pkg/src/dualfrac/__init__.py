"""Spectral solver and verification harness for stationary systems with
two-exponent fractional diffusion on a periodic box."""

from .bounds import (
    BoundsContext,
    build_bounds_context,
    c2_ball_norm,
    continuity_rhs,
    embedding_constant,
    epsilon_threshold,
    kernel_constants,
    phi_minimum,
    sigma_value,
)
from .fixed_point import (
    FixedPointResult,
    apply_tau,
    continuity_experiment,
    measure_contraction,
    sample_ball,
    solve_fixed_point,
    system_residual,
)
from .grid import Grid3, NormReport, ScalarField, Spectrum, VectorField
from .poisson import (
    SolvabilityReport,
    apply_double_fractional,
    box_length_sweep,
    fit_growth_exponent,
    regularity_check,
    solvability_report,
    solve_double_fractional,
    solve_linear_system,
)
from .problems import (
    FractionalOrders,
    GaussianSpec,
    Monomial,
    Nonlinearity,
    ProblemSpec,
    demo_config_text,
    demo_problem,
    eval_nonlinearity,
    load_problem,
    realize_gaussian,
    serialize_problem,
)
from .spectral import (
    apply_fractional_symbol,
    convolve,
    field_norms,
    forward_transform,
    inverse_transform,
    vector_norms,
)

__version__ = "0.1.0"

__all__ = [
    "BoundsContext",
    "FixedPointResult",
    "FractionalOrders",
    "GaussianSpec",
    "Grid3",
    "Monomial",
    "Nonlinearity",
    "NormReport",
    "ProblemSpec",
    "ScalarField",
    "SolvabilityReport",
    "Spectrum",
    "VectorField",
    "apply_double_fractional",
    "apply_fractional_symbol",
    "apply_tau",
    "box_length_sweep",
    "build_bounds_context",
    "c2_ball_norm",
    "continuity_experiment",
    "continuity_rhs",
    "convolve",
    "demo_config_text",
    "demo_problem",
    "embedding_constant",
    "epsilon_threshold",
    "eval_nonlinearity",
    "field_norms",
    "fit_growth_exponent",
    "forward_transform",
    "inverse_transform",
    "kernel_constants",
    "load_problem",
    "measure_contraction",
    "phi_minimum",
    "realize_gaussian",
    "regularity_check",
    "sample_ball",
    "serialize_problem",
    "sigma_value",
    "solvability_report",
    "solve_double_fractional",
    "solve_fixed_point",
    "solve_linear_system",
    "system_residual",
    "vector_norms",
]
