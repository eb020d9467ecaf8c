"""Joint mean-covariance estimation with the mean as a unit eigenvector.

The covariance is modeled as ``Sigma = u u^T + sum_i lambda_i V_i V_i^T``
with ``u`` the unit mean direction, so that ``Sigma mu = mu`` holds by
construction.  The package provides a fast approximate MLE, a MAP estimator
extracted from Metropolis-Hastings-within-Gibbs posterior draws, a fast
lower-bound Newton MAP approximation, a normal-inverse-Wishart baseline and
a Monte-Carlo risk harness.
"""

from .exceptions import (
    DegenerateDataError,
    DimensionMismatchError,
    EmptyChainError,
    MeanCovError,
    NonPositiveEigenvalueError,
    NonUnitVectorError,
    ParseError,
    RangeError,
    RepeatedEigenvaluesError,
    TooFewRowsError,
    ZeroMeanError,
    ZeroVectorError,
)
from .gibbs import (
    ChainState,
    GibbsRun,
    PriorConfig,
    draw_lambda_conditional,
    hn_diagonal,
    hn_matrix,
    log_posterior,
    map_from_chain,
    mh_step_mu,
    run_gibbs,
)
from .mle import (
    MleFit,
    estimate_c0,
    estimate_c0_general,
    estimate_lambdas,
    fit_mle,
    lower_bound_h,
    profile_loglik,
)
from .model import (
    EigenSpectrum,
    MeanState,
    OrthoBasis,
    SampleSet,
    StructuredCovariance,
    assemble_sigma,
    b_matrix,
    build_orthobasis,
    repeated_tail_eigenvectors,
    scatter_matrix,
)
from .newton_map import (
    MapFit,
    NewtonConfig,
    fit_map_newton,
    h_gradient,
    h_hessian,
    h_value,
    map_c0_update,
    map_lambda_update,
)
from .niw import NiwParams, niw_joint_log_density, niw_map, niw_posterior, siw_log_density
from .simulate import (
    RiskReport,
    TruthSpec,
    default_estimators,
    format_table,
    frobenius_risk,
    generate_truth,
    run_experiment,
    sample_data,
)

__version__ = "0.1.0"
