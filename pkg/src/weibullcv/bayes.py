"""Bayesian estimation via random-walk Metropolis sampling.

Independent gamma priors on the shape and rate (all hyper-parameters zero
gives the noninformative reciprocal prior).  The sampler perturbs the
current state with bivariate Gaussian steps and accepts with the usual
posterior ratio; posterior means of the retained states are the point
estimates and shortest-window intervals over the sorted draws are the
credible intervals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .censoring import CensoredSample, EstimationError, midpoint_initial_estimates
from .distribution import WeibullParams, _cv_pair_tolerant
from .mle import IntervalEstimate, _loglik

__all__ = [
    "Prior",
    "EstimateSet",
    "McmcChain",
    "log_posterior",
    "rwmh",
    "bayes_estimate",
    "hpdi",
    "tune_sigma",
    "ACCEPTANCE_BAND",
]

ACCEPTANCE_BAND = (0.25, 0.40)


@dataclass(frozen=True)
class Prior:
    """Gamma(a1, a2) on the shape and Gamma(b1, b2) on the rate.

    ``jeffreys=True`` marks the noninformative reciprocal prior, which is
    exactly the hyper-parameter-free (all-zero) case.
    """

    a1: float = 0.0
    a2: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    jeffreys: bool = False

    def __post_init__(self):
        hyper = (self.a1, self.a2, self.b1, self.b2)
        if any(not math.isfinite(h) or h < 0.0 for h in hyper):
            raise ValueError("hyper-parameters must be nonnegative and finite")
        all_zero = all(h == 0.0 for h in hyper)
        if self.jeffreys and not all_zero:
            raise ValueError("the noninformative prior has all hyper-parameters 0")
        if not self.jeffreys and all_zero:
            raise ValueError(
                "all-zero hyper-parameters define the noninformative prior; "
                "construct it with Prior.noninformative()"
            )

    @classmethod
    def noninformative(cls) -> "Prior":
        return cls(jeffreys=True)


@dataclass(frozen=True)
class EstimateSet:
    """Point estimates of the four inferential targets from one method."""

    kappa: float
    tau: float
    cv_p: float
    cv_k: float

    def as_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "tau": self.tau,
            "cv_p": self.cv_p,
            "cv_k": self.cv_k,
        }


def _log_posterior(kappa: float, tau: float, sample, prior: Prior) -> float:
    if kappa <= 0.0 or tau <= 0.0:
        return -math.inf
    value = (
        (prior.a1 - 1.0) * math.log(kappa)
        - prior.a2 * kappa
        + (prior.b1 - 1.0) * math.log(tau)
        - prior.b2 * tau
    )
    return value + _loglik(kappa, tau, sample)


def log_posterior(params: WeibullParams, sample: CensoredSample, prior: Prior) -> float:
    """Unnormalized log posterior density; -inf off the admissible region."""
    return _log_posterior(params.kappa, params.tau, sample, prior)


@dataclass
class McmcChain:
    """Retained states of one sampler run.

    ``states`` has one row per retained draw with columns (kappa, tau,
    cv_p, cv_k); burn-in is dropped first and every ``thin``-th state of
    the remainder is kept.  ``acceptance_rate`` counts over all ``M``
    proposals, including burn-in.
    """

    states: np.ndarray
    M: int
    M_b: int
    thin: int
    acceptance_rate: float

    @property
    def retained(self) -> int:
        return self.states.shape[0]

    def column(self, target: str) -> np.ndarray:
        idx = {"kappa": 0, "tau": 1, "cv_p": 2, "cv_k": 3}[target]
        return self.states[:, idx]

    def to_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iter", "kappa", "tau", "cv_p", "cv_k"])
            for i, row in enumerate(self.states):
                iteration = self.M_b + (i + 1) * self.thin
                writer.writerow([iteration, *(f"{v:.10g}" for v in row)])


def _cholesky_2x2(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2) or not np.allclose(sigma, sigma.T):
        raise ValueError("proposal covariance must be a symmetric 2x2 matrix")
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise ValueError("proposal covariance must be positive definite") from None


def rwmh(
    sample: CensoredSample,
    prior: Prior,
    M: int,
    M_b: int,
    sigma,
    thin: int = 1,
    rng: np.random.Generator | None = None,
    init: WeibullParams | None = None,
) -> McmcChain:
    """Random-walk Metropolis chain of length ``M`` with burn-in ``M_b``.

    Proposals add a draw from N(0, sigma) to the current state; anything
    outside the positive quadrant has zero posterior density and is
    rejected.  ``init`` defaults to the midpoint starting values.
    """
    if M < 1 or not 0 <= M_b < M:
        raise ValueError(f"need 0 <= M_b < M, got M = {M}, M_b = {M_b}")
    if thin < 1:
        raise ValueError(f"thinning stride must be positive, got {thin}")
    if rng is None:
        rng = np.random.default_rng()
    chol = _cholesky_2x2(sigma)
    if init is None:
        init = midpoint_initial_estimates(sample)
    kappa, tau = init.kappa, init.tau
    log_p = _log_posterior(kappa, tau, sample, prior)
    if not math.isfinite(log_p):
        raise ValueError("initial state has zero posterior density")

    steps = rng.standard_normal((M, 2)) @ chol.T
    log_u = np.log(rng.random(M))
    n_keep = (M - M_b) // thin
    states = np.empty((n_keep, 4))
    kept = 0
    accepted = 0
    for d in range(M):
        cand_k = kappa + steps[d, 0]
        cand_t = tau + steps[d, 1]
        log_p_cand = _log_posterior(cand_k, cand_t, sample, prior)
        if log_p_cand - log_p > log_u[d]:
            kappa, tau, log_p = cand_k, cand_t, log_p_cand
            accepted += 1
        offset = d + 1 - M_b
        if offset > 0 and offset % thin == 0:
            pearson, kvalseth = _cv_pair_tolerant(kappa)
            states[kept] = (kappa, tau, pearson, kvalseth)
            kept += 1
    return McmcChain(
        states=states[:kept],
        M=M,
        M_b=M_b,
        thin=thin,
        acceptance_rate=accepted / M,
    )


def bayes_estimate(chain: McmcChain) -> EstimateSet:
    """Posterior means of the retained states (squared-error-loss estimates)."""
    if chain.retained == 0:
        raise ValueError("chain has no retained states")
    means = chain.states.mean(axis=0)
    return EstimateSet(
        kappa=float(means[0]),
        tau=float(means[1]),
        cv_p=float(means[2]),
        cv_k=float(means[3]),
    )


def hpdi(values, level: float) -> IntervalEstimate:
    """Shortest interval over sorted draws containing a ``level`` fraction.

    Scans every window whose endpoints are ``floor(len * level)`` ranks
    apart and returns the narrowest one, breaking ties toward the lowest
    window.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be inside (0, 1), got {level}")
    ordered = np.sort(np.asarray(values, dtype=float))
    size = ordered.size
    minimum = max(math.ceil(1.0 / (1.0 - level)), 10)
    if size < minimum:
        raise ValueError(
            f"need at least {minimum} draws for a level-{level} interval, "
            f"got {size}"
        )
    span = int(math.floor(size * level))
    widths = ordered[span:] - ordered[: size - span]
    h = int(np.argmin(widths))
    return IntervalEstimate(
        lower=float(ordered[h]), upper=float(ordered[h + span]), level=level
    )


def tune_sigma(
    sample: CensoredSample,
    prior: Prior,
    pilot_M: int,
    rng: np.random.Generator,
    sigma0=None,
) -> np.ndarray:
    """Scale a diagonal proposal covariance until pilot acceptance is in band.

    Doubles or halves the covariance while the acceptance rate sits outside
    [0.25, 0.40]; once both sides of the band have been seen the scale is
    bisected geometrically.  Fails after 40 pilot rounds.
    """
    if pilot_M < 1000:
        raise ValueError(f"pilot chains need at least 1000 steps, got {pilot_M}")
    base = np.diag([1e-2, 1e-2]) if sigma0 is None else np.asarray(sigma0, dtype=float)
    _cholesky_2x2(base)
    init = midpoint_initial_estimates(sample)
    low, high = ACCEPTANCE_BAND
    scale = 1.0
    too_small = None  # largest scale seen with acceptance above the band
    too_big = None  # smallest scale seen with acceptance below the band
    rate = math.nan
    for _ in range(40):
        chain = rwmh(
            sample, prior, M=pilot_M, M_b=0, sigma=scale * base, rng=rng, init=init
        )
        rate = chain.acceptance_rate
        if low <= rate <= high:
            return scale * base
        if rate > high:
            too_small = scale
            scale = math.sqrt(scale * too_big) if too_big is not None else scale * 2.0
        else:
            too_big = scale
            scale = math.sqrt(scale * too_small) if too_small is not None else scale / 2.0
    raise EstimationError(
        f"proposal tuning failed: acceptance {rate:.3f} still outside "
        f"[{low}, {high}] after 40 pilot rounds"
    )
