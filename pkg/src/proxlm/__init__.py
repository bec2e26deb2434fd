"""Matrix-free generalized Levenberg-Marquardt solver for composite problems
min_x g(x) + h(c(x)), with adaptive damping, an accelerated proximal gradient
subproblem solver, baselines, and weighted oracle-cost accounting."""

from .core import (
    BoxIndicator,
    CompositeProblem,
    L1Regularizer,
    Linearization,
    LinearizedModel,
    NumericalFailure,
    OracleLedger,
    ParameterDomain,
    QuadraticLoss,
    UnsupportedRegularizer,
    ZeroRegularizer,
    adjoint_error,
    eval_objective,
    grad_smooth_part,
    ledger_cost,
    linearize,
    nonnegative_orthant,
    operator_norm,
    prox_gradient_residual,
    stationarity,
)
from .apg import (
    ApgConfig,
    ApgReport,
    SubproblemStall,
    apg_solve,
    backtrack_condition,
    cg_solve,
    momentum_step,
)
from .lm import (
    CSV_HEADER,
    IterationRecord,
    LmConfig,
    RunTrace,
    Status,
    accept_test,
    damping,
    lm_solve,
    rho_backtrack_count,
)
from .baselines import DpConfig, PgConfig, dp_solve, pg_solve
from .verify import CheckResult, fit_terminal_order, run_invariant_suite
from .problems import (
    default_start,
    finite_diff_check,
    make_linear_ls,
    make_nmf,
    make_rosenbrock,
    make_toy_interval,
    nmf_gaussian_init,
    random_linear_ls,
)

__version__ = "0.1.0"
