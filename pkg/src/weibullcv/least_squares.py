"""Least-squares estimators and percentile bootstrap intervals.

The linear estimator regresses the log-log transform of a nonparametric
cdf estimate on log inspection times, which is exact when the estimate
lies on a Weibull curve.  The nonlinear estimator minimizes a count-
weighted squared distance between the parametric cdf and the same
nonparametric estimate, searched over log-parameters so the positivity
constraints disappear.  Percentile bootstrap intervals re-estimate on
parametric resamples drawn under the fitted parameters and read endpoints
off the order statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .censoring import (
    CensoredSample,
    CensoringScheme,
    EstimationError,
    f_hat_moments,
    generate_sample,
    implied_proportions,
)
from .distribution import WeibullParams, _cv_pair_tolerant
from .mle import FitResult, IntervalEstimate, _loglik

__all__ = [
    "BootstrapDistribution",
    "llse",
    "nllse",
    "NLLSE_VARIANTS",
    "percentile_interval",
    "bootstrap_estimates",
    "pbi",
    "PBI_TARGETS",
]

NLLSE_VARIANTS = ("weighted", "difference")
PBI_TARGETS = ("kappa", "tau", "cv_p", "cv_k")


@dataclass(frozen=True)
class BootstrapDistribution:
    """Sorted bootstrap replicates of one statistic."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.sort(np.asarray(self.values, float)))

    @property
    def B(self) -> int:
        return self.values.size


def _checked_f_hat(sample: CensoredSample, f_hat) -> np.ndarray:
    values = f_hat_moments(sample) if f_hat is None else np.asarray(f_hat, float)
    if values.shape != (sample.m,):
        raise ValueError("cdf estimate must have one value per boundary")
    if np.any(values <= 0.0) or np.any(values >= 1.0):
        raise ValueError("cdf estimate must lie strictly inside (0, 1)")
    return values


def llse(sample: CensoredSample, f_hat=None) -> FitResult:
    """Linear least squares on the log-log scale.

    ``log(-log(1 - F_i))`` is regressed on ``log t_i``; the slope is the
    shape and the exponentiated intercept is the rate.  ``f_hat`` defaults
    to the moments-approximation cdf estimate, which is defined and
    interior for every valid sample.
    """
    if sample.m < 2:
        raise ValueError("slope is undefined with fewer than two boundaries")
    values = _checked_f_hat(sample, f_hat)
    y = np.log(-np.log1p(-values))
    log_t = np.log(sample.boundaries)
    m = sample.m
    sum_lt = log_t.sum()
    sum_lt2 = (log_t**2).sum()
    sum_y = y.sum()
    sum_ylt = (y * log_t).sum()
    denom = m * sum_lt2 - sum_lt**2
    kappa = float((m * sum_ylt - sum_y * sum_lt) / denom)
    tau = math.exp((sum_y * sum_lt2 - sum_lt * sum_ylt) / denom)
    if not (kappa > 0.0 and math.isfinite(kappa) and math.isfinite(tau)):
        raise EstimationError(f"regression produced inadmissible shape {kappa}")
    pearson, kvalseth = _cv_pair_tolerant(kappa)
    return FitResult(
        params=WeibullParams(kappa=kappa, tau=tau),
        cv_p=pearson,
        cv_k=kvalseth,
        iterations=0,
        converged=True,
        loglik=_loglik(kappa, tau, sample),
    )


def _objective(variant: str, sample: CensoredSample, f_hat: np.ndarray):
    t = sample.boundaries
    t_prev = np.concatenate(([0.0], t[:-1]))
    f_prev = np.concatenate(([0.0], f_hat[:-1]))
    x = sample.failures.astype(float)
    w = sample.withdrawals.astype(float)
    xw = x + w

    if variant == "weighted":
        # failure counts weight the per-interval cdf increments, withdrawal
        # counts weight the survivor mismatch at each boundary
        def objective(xi):
            kappa, tau = math.exp(xi[0]), math.exp(xi[1])
            cdf_t = -np.expm1(-tau * t**kappa)
            cdf_prev = -np.expm1(-tau * t_prev**kappa)
            inc = (cdf_t - cdf_prev) - (f_hat - f_prev)
            surv = f_hat - cdf_t
            return float(np.sum(x * inc**2) + np.sum(w * surv**2))

    elif variant == "difference":
        # telescoped form built from boundary residuals alone; not a sum of
        # squares, so it can dip below zero away from a perfect fit
        def objective(xi):
            kappa, tau = math.exp(xi[0]), math.exp(xi[1])
            res_t = -np.expm1(-tau * t**kappa) - f_hat
            res_prev = -np.expm1(-tau * t_prev**kappa) - f_prev
            return float(np.sum(xw * res_t**2 - x * res_prev**2))

    else:
        raise ValueError(f"unknown objective variant {variant!r}")
    return objective


def nllse(
    sample: CensoredSample,
    variant: str = "weighted",
    f_hat=None,
    start: WeibullParams | None = None,
) -> FitResult:
    """Nonlinear least squares over log-parameters, started at the linear fit.

    ``variant`` selects the objective: ``"weighted"`` (count-weighted cdf
    increments plus survivor terms, the default) or ``"difference"`` (the
    telescoped boundary-residual form).
    """
    if sample.m < 2:
        raise ValueError("need at least two boundaries")
    values = _checked_f_hat(sample, f_hat)
    objective = _objective(variant, sample, values)
    if start is None:
        start = llse(sample, f_hat=values).params
    result = minimize(
        objective,
        x0=[math.log(start.kappa), math.log(start.tau)],
        method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000, "maxfev": 4000},
    )
    kappa, tau = math.exp(result.x[0]), math.exp(result.x[1])
    pearson, kvalseth = _cv_pair_tolerant(kappa)
    return FitResult(
        params=WeibullParams(kappa=kappa, tau=tau),
        cv_p=pearson,
        cv_k=kvalseth,
        iterations=int(result.nit),
        converged=bool(result.success),
        loglik=_loglik(kappa, tau, sample),
        message="" if result.success else str(result.message),
    )


def percentile_interval(values, level: float) -> IntervalEstimate:
    """Interval from the order statistics at ranks ``B*beta/2`` and
    ``B*(1 - beta/2)`` of the sorted values."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be inside (0, 1), got {level}")
    ordered = np.sort(np.asarray(values, dtype=float))
    size = ordered.size
    if size == 0:
        raise ValueError("need at least one bootstrap value")
    beta = 1.0 - level
    low_rank = min(max(int(round(size * beta / 2.0)), 1), size)
    high_rank = min(max(int(round(size * (1.0 - beta / 2.0))), 1), size)
    return IntervalEstimate(
        lower=float(ordered[low_rank - 1]),
        upper=float(ordered[high_rank - 1]),
        level=level,
    )


def _fit_for(estimator: str, sample: CensoredSample, variant: str) -> FitResult:
    if estimator == "llse":
        return llse(sample)
    if estimator == "nllse":
        return nllse(sample, variant=variant)
    raise ValueError(f"unknown bootstrap estimator {estimator!r}")


def _interior(fit: FitResult) -> bool:
    """Reject resample fits that ran off to a boundary of the search region.

    The telescoped objective is indefinite, so a local search can escape to
    absurd parameter values on unlucky resamples; those fits are estimator
    failures, not sampling variation.
    """
    return (
        0.0505 < fit.params.kappa < 49.5
        and 0.0 < fit.params.tau
        and math.isfinite(fit.params.tau)
        and math.isfinite(fit.cv_p)
    )


def bootstrap_estimates(
    sample: CensoredSample,
    estimator: str,
    B: int,
    rng: np.random.Generator,
    scheme: CensoringScheme | None = None,
    variant: str = "weighted",
) -> dict[str, BootstrapDistribution]:
    """Parametric bootstrap replicates of (shape, rate, cv_p, cv_k).

    Resamples are drawn from the fitted parameters under the sample's own
    censoring geometry (or an explicitly supplied ``scheme``).  Draws on
    which the estimator fails are replaced by fresh draws so the returned
    distributions hold exactly ``B`` points; the total attempt budget is
    ``10 * B``.
    """
    if B < 1:
        raise ValueError(f"need a positive resample count, got {B}")
    base = _fit_for(estimator, sample, variant)
    if not base.converged:
        raise EstimationError(
            f"{estimator} did not converge on the original sample: {base.message}"
        )
    if scheme is None:
        scheme = CensoringScheme(
            boundaries=tuple(sample.boundaries),
            proportions=implied_proportions(sample),
        )
    collected = np.empty((B, 4))
    done = 0
    attempts = 0
    budget = 10 * B
    while done < B:
        if attempts >= budget:
            raise EstimationError(
                f"bootstrap budget exhausted: {attempts - done} failures in "
                f"{attempts} attempts ({(attempts - done) / attempts:.1%})"
            )
        attempts += 1
        resample = generate_sample(base.params, scheme, sample.n, rng)
        if resample.total_failures == 0:
            continue
        try:
            fit = _fit_for(estimator, resample, variant)
        except (EstimationError, ValueError):
            continue
        if not fit.converged or not _interior(fit):
            continue
        collected[done] = (fit.params.kappa, fit.params.tau, fit.cv_p, fit.cv_k)
        done += 1
    return {
        name: BootstrapDistribution(values=collected[:, idx])
        for idx, name in enumerate(PBI_TARGETS)
    }


def pbi(
    sample: CensoredSample,
    estimator: str,
    B: int,
    level: float,
    rng: np.random.Generator,
    scheme: CensoringScheme | None = None,
    variant: str = "weighted",
) -> dict[str, IntervalEstimate]:
    """Percentile bootstrap intervals for shape, rate and both CVs."""
    distributions = bootstrap_estimates(
        sample, estimator, B, rng, scheme=scheme, variant=variant
    )
    return {
        name: percentile_interval(dist.values, level)
        for name, dist in distributions.items()
    }
