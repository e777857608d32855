"""Multi-parameter Tikhonov regularization.

Solves ill-posed linear problems Ku = g with two simultaneous penalty
terms, J(u) = 1/2 ||Ku - g||^2 + eta1 psi1(u) + eta2 psi2(u), and picks
the weight pair (eta1, eta2) automatically: either by driving a balanced
discrepancy system to zero (Broyden iteration) or by a fixed point of
the balancing functional. Ships the penalty models h1-tv, elastic-net
and quad-quad, three reference test problems, and a grid oracle for
measuring how close the selected pair comes to the best possible one.
"""

from .core import (
    Grid,
    MultitikError,
    PenaltyDegenerate,
    Problem,
    RegParams,
    SelectionResult,
    SingularJacobian,
    TikhonovSolution,
    TRACE_COLUMNS,
    weight_t,
)
from .penalties import (
    Penalty,
    PenaltyModel,
    eval_penalty,
    forward_diff_matrix,
    make_model,
    penalty_operator,
    soft_threshold,
)
from .problems import (
    EXAMPLES,
    KernelSpec,
    add_noise,
    discretize_kernel,
    load_problem,
    make_test_problem,
    save_problem,
)
from .selection import (
    GridSpec,
    SelectionOptions,
    default_eta0,
    oracle_grid,
    phi_gamma,
    relative_error,
    residual_bdp,
    select_broyden,
    select_fixed_point,
    value_function,
)
from .solvers import (
    SolverOptions,
    solve_elastic_net,
    solve_h1tv,
    solve_quadratic,
    solve_tikhonov,
)

__version__ = "0.1.0"

__all__ = [
    "EXAMPLES",
    "Grid",
    "GridSpec",
    "KernelSpec",
    "MultitikError",
    "Penalty",
    "PenaltyDegenerate",
    "PenaltyModel",
    "Problem",
    "RegParams",
    "SelectionOptions",
    "SelectionResult",
    "SingularJacobian",
    "SolverOptions",
    "TRACE_COLUMNS",
    "TikhonovSolution",
    "add_noise",
    "default_eta0",
    "discretize_kernel",
    "eval_penalty",
    "forward_diff_matrix",
    "load_problem",
    "make_model",
    "make_test_problem",
    "oracle_grid",
    "penalty_operator",
    "phi_gamma",
    "relative_error",
    "residual_bdp",
    "save_problem",
    "select_broyden",
    "select_fixed_point",
    "soft_threshold",
    "solve_elastic_net",
    "solve_h1tv",
    "solve_quadratic",
    "solve_tikhonov",
    "value_function",
    "weight_t",
]
