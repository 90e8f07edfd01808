"""QP solvers plus the brute-force and holding-back checks."""

from .checks import (
    GridOracleResult,
    HoldingBack,
    detect_holding_back,
    flow_upper_bounds,
    grid_oracle,
)
from .solvers import (
    DENSE_REFERENCE_MAX_VARS,
    QpSolution,
    SolverSettings,
    Status,
    kkt_residuals,
    solve,
    solve_dense_reference,
    stack_constraints,
)

__all__ = [
    "DENSE_REFERENCE_MAX_VARS",
    "GridOracleResult",
    "HoldingBack",
    "QpSolution",
    "SolverSettings",
    "Status",
    "detect_holding_back",
    "flow_upper_bounds",
    "grid_oracle",
    "kkt_residuals",
    "solve",
    "solve_dense_reference",
    "stack_constraints",
]
