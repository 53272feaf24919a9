"""Weibull shape, rate and coefficient-of-variation estimation from
type-I progressively interval-censored data.

Point estimation by maximum likelihood, linear and nonlinear least
squares, and posterior means from random-walk Metropolis sampling;
interval estimation by normal-theory intervals (plain and log-scale),
percentile bootstrap and shortest posterior windows; plus a replicated
simulation harness for comparing the methods.
"""

from .bayes import (
    EstimateSet,
    McmcChain,
    Prior,
    bayes_estimate,
    hpdi,
    log_posterior,
    rwmh,
    tune_sigma,
)
from .censoring import (
    CensoredSample,
    CensoringScheme,
    EstimationError,
    f_hat_km,
    f_hat_moments,
    generate_sample,
    midpoint_initial_estimates,
    read_sample,
    standard_proportions,
    write_sample,
)
from .data import plasma_cell_myeloma
from .distribution import (
    WeibullParams,
    cdf,
    cv_k,
    cv_k_dkappa,
    cv_p,
    cv_p_dkappa,
    digamma,
    log_gamma,
    pdf,
    quantile,
)
from .least_squares import (
    BootstrapDistribution,
    bootstrap_estimates,
    llse,
    nllse,
    pbi,
    percentile_interval,
)
from .mle import (
    FitResult,
    IntervalEstimate,
    aci,
    covariance,
    delta_variance,
    equivalent_failure_time,
    fit_alternative_mle,
    log_likelihood,
    maci,
    newton_raphson,
    normal_quantile,
    observed_information,
    score,
)
from .montecarlo import StudyConfig, StudyReport, avg_width, coverage, mse, run_study

__version__ = "0.1.0"

__all__ = [
    "WeibullParams",
    "cdf",
    "pdf",
    "quantile",
    "log_gamma",
    "digamma",
    "cv_p",
    "cv_k",
    "cv_p_dkappa",
    "cv_k_dkappa",
    "CensoredSample",
    "CensoringScheme",
    "EstimationError",
    "generate_sample",
    "f_hat_moments",
    "f_hat_km",
    "midpoint_initial_estimates",
    "standard_proportions",
    "read_sample",
    "write_sample",
    "FitResult",
    "IntervalEstimate",
    "log_likelihood",
    "score",
    "newton_raphson",
    "equivalent_failure_time",
    "fit_alternative_mle",
    "observed_information",
    "covariance",
    "delta_variance",
    "normal_quantile",
    "aci",
    "maci",
    "BootstrapDistribution",
    "llse",
    "nllse",
    "percentile_interval",
    "bootstrap_estimates",
    "pbi",
    "Prior",
    "EstimateSet",
    "McmcChain",
    "log_posterior",
    "rwmh",
    "bayes_estimate",
    "hpdi",
    "tune_sigma",
    "StudyConfig",
    "StudyReport",
    "mse",
    "coverage",
    "avg_width",
    "run_study",
    "plasma_cell_myeloma",
]
