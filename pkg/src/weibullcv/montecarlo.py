"""Replicated simulation studies: MSE, coverage and average interval width.

Each replication draws one censored sample under the configured truth and
scheme, discards draws that terminate before the last boundary or contain
no failures (counting the rejections), runs the selected point estimators
and interval methods, and aggregates squared errors, coverage indicators
and widths.  Replications use independent seed streams derived from the
base seed, so a report is a deterministic function of its configuration.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bayes as bayes_mod
from . import least_squares as ls_mod
from . import mle as mle_mod
from .censoring import (
    KAPPA_SEARCH_BOUNDS,
    CensoredSample,
    CensoringScheme,
    EstimationError,
    generate_sample,
)
from .distribution import WeibullParams, _cv_pair_tolerant

__all__ = [
    "TARGETS",
    "POINT_METHODS",
    "INTERVAL_METHODS",
    "StudyConfig",
    "StudyReport",
    "mse",
    "coverage",
    "avg_width",
    "run_study",
]

TARGETS = ("kappa", "tau", "cv_p", "cv_k")
POINT_METHODS = ("mle", "llse", "nllse", "bayes")
INTERVAL_METHODS = ("aci", "maci", "pbi_l", "pbi_nl", "hpdi")

# random-walk proposal scaling for a 2-d target, applied to the MLE covariance
_PROPOSAL_SCALE = 2.38**2 / 2.0
_MAX_SAMPLE_ATTEMPTS = 10_000
_METHOD_RETRIES = 10
_UNRELIABLE_FRACTION = 0.2


@dataclass(frozen=True)
class StudyConfig:
    truth: WeibullParams
    scheme: CensoringScheme
    n: int
    L: int = 300
    B: int = 500
    M: int = 10_000
    M_b: int = 1_000
    prior: bayes_mod.Prior = field(default_factory=bayes_mod.Prior.noninformative)
    level: float = 0.95
    methods: tuple = POINT_METHODS
    intervals: tuple = ("maci", "hpdi")
    seed: int = 0
    thin: int = 1
    nllse_variant: str = "weighted"

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"need at least one replication, got L = {self.L}")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must be inside (0, 1), got {self.level}")
        for name in self.methods:
            if name not in POINT_METHODS:
                raise ValueError(f"unknown point method {name!r}")
        for name in self.intervals:
            if name not in INTERVAL_METHODS:
                raise ValueError(f"unknown interval method {name!r}")
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "intervals", tuple(self.intervals))


@dataclass
class StudyReport:
    """Aggregated study results for one configuration cell."""

    n: int
    m: int
    L: int
    seed: int
    scheme: dict
    truth: dict
    mse: dict
    coverage: dict
    avg_width: dict
    failures: dict
    unreliable: tuple
    rejected_samples: int

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "L": self.L,
            "seed": self.seed,
            "scheme": self.scheme,
            "truth": self.truth,
            "mse": self.mse,
            "coverage": self.coverage,
            "avg_width": self.avg_width,
            "failures": self.failures,
            "unreliable": list(self.unreliable),
            "rejected_samples": self.rejected_samples,
        }

    def write_json(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )

    def csv_rows(self):
        rows = []
        for method, per_target in self.mse.items():
            for target, value in per_target.items():
                rows.append(("point", method, target, "mse", value))
        for name, per_target in self.coverage.items():
            for target, value in per_target.items():
                rows.append(("interval", name, target, "cp", value))
        for name, per_target in self.avg_width.items():
            for target, value in per_target.items():
                rows.append(("interval", name, target, "aw", value))
        return rows

    def write_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["kind", "method", "target", "metric", "value"])
            for row in self.csv_rows():
                writer.writerow(row)


def mse(values, truth: float) -> float:
    """Mean squared deviation from the true value."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("mse of an empty collection is undefined")
    return float(np.mean((arr - truth) ** 2))


def coverage(intervals, truth: float) -> float:
    """Fraction of intervals whose closed range contains the true value."""
    intervals = list(intervals)
    if not intervals:
        raise ValueError("coverage of an empty collection is undefined")
    hits = sum(1 for iv in intervals if iv.lower <= truth <= iv.upper)
    return hits / len(intervals)


def avg_width(intervals) -> float:
    """Mean interval width."""
    intervals = list(intervals)
    if not intervals:
        raise ValueError("width of an empty collection is undefined")
    return float(np.mean([iv.upper - iv.lower for iv in intervals]))


def _replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))
    )


def _premature(sample: CensoredSample) -> bool:
    """True when the risk set empties before the final boundary."""
    used = np.cumsum(sample.failures + sample.withdrawals)
    return bool(np.any(used[:-1] == sample.n))


def _draw_valid_sample(config: StudyConfig, rng) -> tuple[CensoredSample, int]:
    rejected = 0
    for _ in range(_MAX_SAMPLE_ATTEMPTS):
        sample = generate_sample(config.truth, config.scheme, config.n, rng)
        if sample.total_failures == 0 or _premature(sample):
            rejected += 1
            continue
        return sample, rejected
    raise EstimationError(
        f"could not draw a usable sample in {_MAX_SAMPLE_ATTEMPTS} attempts; "
        "the configuration is degenerate"
    )


def _fit_mle(sample: CensoredSample) -> mle_mod.FitResult:
    fit = mle_mod.newton_raphson(sample)
    if not fit.converged:
        fit = mle_mod.fit_alternative_mle(sample)
    if not fit.converged:
        raise EstimationError(f"maximum likelihood fit failed: {fit.message}")
    if not _usable(_point_dict(fit.params.kappa, fit.params.tau)):
        raise EstimationError(
            f"shape estimate {fit.params.kappa:.4g} left the interior search region"
        )
    return fit


def _proposal_sigma(fit: mle_mod.FitResult, sample: CensoredSample) -> np.ndarray:
    try:
        cov = mle_mod.covariance(mle_mod.observed_information(fit.params, sample))
        if cov[0, 0] > 0.0 and cov[1, 1] > 0.0 and np.linalg.det(cov) > 0.0:
            return _PROPOSAL_SCALE * cov
    except EstimationError:
        pass
    return np.diag(
        [(0.1 * fit.params.kappa) ** 2, (0.1 * fit.params.tau) ** 2]
    )


class _Replication:
    """Estimates and intervals obtained from one accepted sample."""

    def __init__(self):
        self.points = {}  # method -> {target: value}
        self.intervals = {}  # interval method -> {target: IntervalEstimate}
        self.failed = set()


def _point_dict(kappa: float, tau: float) -> dict:
    pearson, kvalseth = _cv_pair_tolerant(kappa)
    return {"kappa": kappa, "tau": tau, "cv_p": pearson, "cv_k": kvalseth}


def _usable(point: dict) -> bool:
    """A point estimate counts only when the shape stayed interior.

    A shape pinned against the search bounds marks a fit whose interior
    maximum does not exist (the likelihood climbs toward a boundary), and
    its CV blows up; such replications are treated as estimator failures
    and redrawn rather than poisoning the aggregates.
    """
    low, high = KAPPA_SEARCH_BOUNDS
    return (
        low * 1.01 < point["kappa"] < high * 0.99
        and point["tau"] > 0.0
        and math.isfinite(point["tau"])
        and math.isfinite(point["cv_p"])
    )


def _run_once(config: StudyConfig, sample: CensoredSample, rng, hook) -> _Replication:
    out = _Replication()
    need_mle = (
        "mle" in config.methods
        or "aci" in config.intervals
        or "maci" in config.intervals
        or "bayes" in config.methods
        or "hpdi" in config.intervals
    )
    mle_fit = None
    if need_mle:
        try:
            mle_fit = _fit_mle(sample)
        except EstimationError:
            for name in ("mle", "aci", "maci"):
                if name in config.methods or name in config.intervals:
                    out.failed.add(name)

    if "mle" in config.methods:
        if hook is not None:
            out.points["mle"] = hook("mle", sample)
        elif mle_fit is not None:
            out.points["mle"] = _point_dict(mle_fit.params.kappa, mle_fit.params.tau)

    for name, variant_free in (("llse", True), ("nllse", False)):
        if name not in config.methods:
            continue
        if hook is not None:
            out.points[name] = hook(name, sample)
            continue
        try:
            fit = (
                ls_mod.llse(sample)
                if variant_free
                else ls_mod.nllse(sample, variant=config.nllse_variant)
            )
            if not fit.converged:
                raise EstimationError("optimizer did not converge")
            point = _point_dict(fit.params.kappa, fit.params.tau)
            if not _usable(point):
                raise EstimationError("estimate left the interior search region")
            out.points[name] = point
        except (EstimationError, ValueError):
            out.failed.add(name)

    chain = None
    if "bayes" in config.methods or "hpdi" in config.intervals:
        if mle_fit is None:
            out.failed.update(
                name
                for name in ("bayes", "hpdi")
                if name in config.methods or name in config.intervals
            )
        else:
            sigma = _proposal_sigma(mle_fit, sample)
            chain = bayes_mod.rwmh(
                sample,
                config.prior,
                M=config.M,
                M_b=config.M_b,
                sigma=sigma,
                thin=config.thin,
                rng=rng,
                init=mle_fit.params,
            )
            if "bayes" in config.methods:
                if hook is not None:
                    out.points["bayes"] = hook("bayes", sample)
                else:
                    point = bayes_mod.bayes_estimate(chain).as_dict()
                    if _usable(point):
                        out.points["bayes"] = point
                    else:
                        out.failed.add("bayes")

    if mle_fit is not None and ("aci" in config.intervals or "maci" in config.intervals):
        try:
            cov = mle_mod.covariance(
                mle_mod.observed_information(mle_fit.params, sample)
            )
            for name in ("aci", "maci"):
                if name not in config.intervals:
                    continue
                build = mle_mod.aci if name == "aci" else mle_mod.maci
                per_target = {}
                for target in TARGETS:
                    variance = mle_mod.delta_variance(mle_fit.params, cov, target)
                    estimate = _point_dict(
                        mle_fit.params.kappa, mle_fit.params.tau
                    )[target]
                    per_target[target] = build(estimate, variance, config.level)
                out.intervals[name] = per_target
        except (EstimationError, ValueError):
            out.failed.update(n for n in ("aci", "maci") if n in config.intervals)

    for name, estimator in (("pbi_l", "llse"), ("pbi_nl", "nllse")):
        if name not in config.intervals:
            continue
        try:
            out.intervals[name] = ls_mod.pbi(
                sample,
                estimator,
                B=config.B,
                level=config.level,
                rng=rng,
                scheme=config.scheme,
                variant=config.nllse_variant,
            )
        except (EstimationError, ValueError):
            out.failed.add(name)

    if "hpdi" in config.intervals and chain is not None:
        try:
            if not np.all(np.isfinite(chain.states)):
                raise ValueError("chain contains non-finite CV states")
            out.intervals["hpdi"] = {
                target: bayes_mod.hpdi(chain.column(target), config.level)
                for target in TARGETS
            }
        except ValueError:
            out.failed.add("hpdi")

    return out


def run_study(config: StudyConfig, estimate_hook=None) -> StudyReport:
    """Run the configured study and aggregate its metrics.

    ``estimate_hook(method, sample) -> {target: value}`` substitutes point
    estimates when given; it exists so metric plumbing can be exercised
    against known values.
    """
    truth_points = _point_dict(config.truth.kappa, config.truth.tau)
    point_values = {name: {t: [] for t in TARGETS} for name in config.methods}
    interval_values = {name: {t: [] for t in TARGETS} for name in config.intervals}
    failures = {name: 0 for name in (*config.methods, *config.intervals)}
    rejected = 0

    for rep in range(config.L):
        rng = _replication_rng(config.seed, rep)
        outcome = None
        for _ in range(_METHOD_RETRIES):
            sample, n_rejected = _draw_valid_sample(config, rng)
            rejected += n_rejected
            outcome = _run_once(config, sample, rng, estimate_hook)
            if not outcome.failed:
                break
        for name in outcome.failed:
            failures[name] += 1
        for name, values in outcome.points.items():
            for target in TARGETS:
                point_values[name][target].append(values[target])
        for name, per_target in outcome.intervals.items():
            for target in TARGETS:
                interval_values[name][target].append(per_target[target])

    mse_out = {
        name: {
            target: (mse(vals, truth_points[target]) if vals else math.nan)
            for target, vals in per_target.items()
        }
        for name, per_target in point_values.items()
    }
    cp_out = {
        name: {
            target: (coverage(ivs, truth_points[target]) if ivs else math.nan)
            for target, ivs in per_target.items()
        }
        for name, per_target in interval_values.items()
    }
    aw_out = {
        name: {
            target: (avg_width(ivs) if ivs else math.nan)
            for target, ivs in per_target.items()
        }
        for name, per_target in interval_values.items()
    }
    unreliable = tuple(
        sorted(
            name
            for name, count in failures.items()
            if count > _UNRELIABLE_FRACTION * config.L
        )
    )
    return StudyReport(
        n=config.n,
        m=config.scheme.m,
        L=config.L,
        seed=config.seed,
        scheme={
            "boundaries": list(config.scheme.boundaries),
            "proportions": list(config.scheme.proportions),
        },
        truth=truth_points,
        mse=mse_out,
        coverage=cp_out,
        avg_width=aw_out,
        failures=failures,
        unreliable=unreliable,
        rejected_samples=rejected,
    )
