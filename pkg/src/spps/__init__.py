"""Strictly positive propensity scores and inverse probability weighting.

A propensity model with explicit lower (and, in the causal setting, upper)
bounds baked into the link, its maximum-likelihood fitting procedure, IPW
estimators of a population mean and of the average treatment effect built on
it, and reproducible Monte Carlo / bootstrap harnesses.
"""

from .bootstrap import BootstrapConfig, VariantEstimator, bootstrap_estimate, bootstrap_statistic
from .errors import (
    BootstrapUnreliableError,
    DegenerateFitError,
    EstimationError,
    InputError,
    NonConvergenceError,
    SPPSError,
)
from .estimators import (
    EstimateReport,
    estimate_ate_ipw,
    estimate_ate_ld,
    estimate_mean_ipw,
    ld_correction_constants,
)
from .fit import FitResult, check_identifiability, fit_spps
from .model import (
    LOGISTIC,
    MISSING_DATA,
    PROBIT,
    TREATMENT,
    Dataset,
    LinkFunction,
    Theta,
    build_dataset,
    evaluate_propensity,
    get_link,
    log_likelihood,
    score,
)
from .simulation import (
    MseTable,
    SimulationConfig,
    generate_sample,
    run_monte_carlo,
    run_replicates,
    table_grid,
    true_propensity,
)
from .solvers import (
    SolverControls,
    StepResult,
    beta_step,
    delta_step,
    epsilon_step,
    fit_plain_glm,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "BootstrapUnreliableError",
    "Dataset",
    "DegenerateFitError",
    "EstimateReport",
    "EstimationError",
    "FitResult",
    "InputError",
    "LOGISTIC",
    "LinkFunction",
    "MISSING_DATA",
    "MseTable",
    "NonConvergenceError",
    "PROBIT",
    "SPPSError",
    "SimulationConfig",
    "SolverControls",
    "StepResult",
    "TREATMENT",
    "Theta",
    "VariantEstimator",
    "beta_step",
    "bootstrap_estimate",
    "bootstrap_statistic",
    "build_dataset",
    "check_identifiability",
    "delta_step",
    "epsilon_step",
    "estimate_ate_ipw",
    "estimate_ate_ld",
    "estimate_mean_ipw",
    "evaluate_propensity",
    "fit_plain_glm",
    "fit_spps",
    "generate_sample",
    "get_link",
    "ld_correction_constants",
    "log_likelihood",
    "run_monte_carlo",
    "run_replicates",
    "score",
    "table_grid",
    "true_propensity",
]
