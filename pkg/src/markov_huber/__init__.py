"""Robust l1-penalized Huber regression for Markov-dependent heavy-tailed data.

Layout: huber_core (loss kernel), solver (proximal gradient), adaptive
(threshold/penalty rules), markov_sim (chains, errors, datasets),
diagnostics (measured vs bounded quantities), sweep + cli (experiments).
"""

from .adaptive import (
    AdaptiveSpec,
    coefficient_error_bounds,
    consistency_precondition,
    effective_sample_factor,
    select_lambda,
    select_tau,
)
from .diagnostics import (
    ConcentrationReport,
    LREQuery,
    bernstein_check,
    bernstein_tail_bound,
    covariance_deviation,
    grad_supnorm_at_truth,
    gradient_supnorm_bound,
    lre_estimate,
    truncated_tail_bound,
    truncated_tail_sum,
)
from .errors import (
    InvalidChainError,
    InvalidInputError,
    InvalidModelError,
    NumericalError,
    UnsupportedChainError,
)
from .huber_core import (
    HuberConfig,
    Problem,
    TruthSpec,
    hessian_quadratic_form,
    huber_deriv,
    huber_value,
    loss_gradient,
    loss_value,
    truncate,
)
from .markov_sim import (
    ChainSpec,
    CovariateMap,
    Dataset,
    ErrorModel,
    generate_dataset,
    load_dataset,
    load_meta,
    make_chain_with_gamma,
    moment_vdelta,
    sample_errors,
    save_dataset,
    simulate_chain,
    spectral_gamma,
    stationary_distribution,
)
from .solver import (
    SolverConfig,
    SolverResult,
    fit,
    kkt_residual,
    lambda_max,
    soft_threshold,
)
from .sweep import (
    ESTIMATORS,
    RESULTS_HEADER,
    SUPPORT_THRESHOLD,
    ResultRow,
    SweepConfig,
    cell_seed,
    family_label,
    fit_row,
    generate_cell_dataset,
    make_beta_star,
    make_cell_components,
    make_error_model,
    parse_family,
    rate_fit,
    read_results_csv,
    run_diagnose,
    run_sweep,
    write_results_csv,
)

__version__ = "0.1.0"
