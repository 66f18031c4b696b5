"""Alpha-weighted two-stage ODE steps with Taylor-series weights."""

from .errors import (
    AlphaODEError,
    DimensionMismatch,
    DivergentSeries,
    DomainError,
    MalformedExpression,
    MaxStepsExceeded,
    MuUnidentified,
    UnboundParameter,
    UnsupportedFixture,
)
from .expr import Expr, diff_expr, parse, to_prefix
from .jet import Jet, TaylorExpansion, ode_taylor_coeffs, series_tail_estimate
from .scheme import (
    AlphaWeights,
    SolverConfig,
    StepDiagnostics,
    Trajectory,
    alpha_step,
    alpha_weights,
    integrate,
    predictor,
    taylor_fallback_step,
)
from .system import OdeSystem, State, build_system, eval_rhs, reduce_order

__all__ = [
    "AlphaODEError", "DimensionMismatch", "DivergentSeries", "DomainError",
    "MalformedExpression", "MaxStepsExceeded", "MuUnidentified", "UnboundParameter",
    "UnsupportedFixture", "Expr", "diff_expr", "parse", "to_prefix", "Jet",
    "TaylorExpansion", "ode_taylor_coeffs", "series_tail_estimate", "AlphaWeights",
    "SolverConfig", "StepDiagnostics", "Trajectory", "alpha_step", "alpha_weights",
    "integrate", "predictor", "taylor_fallback_step", "OdeSystem", "State",
    "build_system", "eval_rhs", "reduce_order",
]
