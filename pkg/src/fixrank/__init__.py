"""Fixed-rank matrix recovery with a non-convex rank regularizer."""

from .errors import BracketError, FixrankError, IngestionError, InvalidInputError, UnsupportedOperatorError
from .operators import (
    AugmentedOperator,
    DenseOperator,
    MeasurementOperator,
    NrsfmOperator,
    ProblemInstance,
    adjoint,
    apply,
    exact_delta_square,
    sharp,
    unsharp,
)
from .regularizer import (
    Certificate,
    ProxResult,
    certify,
    eval_G,
    eval_Rr,
    ksupport_sq,
    prox_rr,
    s_star,
    subgrad_representative,
)
from .solvers import (
    SolverConfig,
    SolverTrace,
    bisect_mu,
    gist_solve,
    gradient_step,
    is_stationary,
    nuclear_prox,
    nuclear_solve,
    objective_rr,
)
from .spectral import SVDFactors, numerical_rank, svd, truncate_rank

__version__ = "0.1.0"
