"""Type-I progressively interval-censored samples.

A sample records, for each inspection time ``t_1 < ... < t_m`` (with an
implicit ``t_0 = 0``), the count of failures observed in ``(t_{i-1}, t_i]``
and the count of surviving units withdrawn at ``t_i``.  A censoring scheme
pairs the inspection times with withdrawal proportions; the final
proportion is 1 so that the experiment fully accounts for every unit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .distribution import WeibullParams

__all__ = [
    "EstimationError",
    "CensoredSample",
    "CensoringScheme",
    "standard_proportions",
    "generate_sample",
    "f_hat_moments",
    "f_hat_km",
    "midpoint_initial_estimates",
    "implied_proportions",
    "read_sample",
    "write_sample",
]

KAPPA_SEARCH_BOUNDS = (0.05, 50.0)


class EstimationError(RuntimeError):
    """An estimator could not produce a result for this sample."""


def _as_boundaries(values) -> np.ndarray:
    t = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("boundaries must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(t)) or t[0] <= 0.0 or np.any(np.diff(t) <= 0.0):
        raise ValueError("boundaries must be finite, positive, strictly increasing")
    return t


def _as_counts(values, m: int, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.shape != (m,):
        raise ValueError(f"{name} must have one entry per interval")
    if not np.all(arr == np.floor(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative integers")
    return arr.astype(np.int64)


@dataclass
class CensoredSample:
    """Inspection boundaries with per-interval failure and withdrawal counts.

    ``n`` is the number of units placed at time zero and must equal the
    total of all failures and withdrawals.  Estimators that need at least
    one observed failure enforce that requirement themselves; a sample with
    zero failures is structurally valid (the generator can produce one).
    """

    boundaries: np.ndarray
    failures: np.ndarray
    withdrawals: np.ndarray
    n: int
    # Plain-float views used by likelihood loops; filled in __post_init__.
    _t: tuple = field(init=False, repr=False, compare=False)
    _logt: tuple = field(init=False, repr=False, compare=False)
    _x: tuple = field(init=False, repr=False, compare=False)
    _w: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.boundaries = _as_boundaries(self.boundaries)
        m = self.boundaries.size
        self.failures = _as_counts(self.failures, m, "failures")
        self.withdrawals = _as_counts(self.withdrawals, m, "withdrawals")
        total = int(self.failures.sum() + self.withdrawals.sum())
        if total != int(self.n):
            raise ValueError(
                f"counts sum to {total} but n = {self.n}; every unit must be "
                "accounted for"
            )
        self.n = int(self.n)
        self._t = tuple(float(v) for v in self.boundaries)
        self._logt = tuple(math.log(v) for v in self._t)
        self._x = tuple(float(v) for v in self.failures)
        self._w = tuple(float(v) for v in self.withdrawals)

    @property
    def m(self) -> int:
        return self.boundaries.size

    @property
    def total_failures(self) -> int:
        return int(self.failures.sum())

    def to_dict(self) -> dict:
        return {
            "t": [float(v) for v in self.boundaries],
            "X": [int(v) for v in self.failures],
            "W": [int(v) for v in self.withdrawals],
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CensoredSample":
        try:
            t, x, w = data["t"], data["X"], data["W"]
        except (KeyError, TypeError) as err:
            raise ValueError(f"sample record is missing field {err}") from None
        n = data.get("n")
        if n is None:
            n = int(np.sum(x) + np.sum(w))
        return cls(boundaries=t, failures=x, withdrawals=w, n=n)


@dataclass(frozen=True)
class CensoringScheme:
    """Inspection boundaries plus withdrawal proportions, last one equal to 1."""

    boundaries: tuple
    proportions: tuple

    def __post_init__(self):
        t = _as_boundaries(self.boundaries)
        p = np.asarray(self.proportions, dtype=float)
        if p.shape != t.shape:
            raise ValueError("need one withdrawal proportion per boundary")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("withdrawal proportions must lie in [0, 1]")
        if p[-1] != 1.0:
            raise ValueError("the final withdrawal proportion must be 1")
        object.__setattr__(self, "boundaries", tuple(float(v) for v in t))
        object.__setattr__(self, "proportions", tuple(float(v) for v in p))

    @property
    def m(self) -> int:
        return len(self.boundaries)


_STANDARD_SCHEMES = {
    ("I", 4): (0.0, 0.0, 0.0, 1.0),
    ("II", 4): (0.5, 0.0, 0.0, 1.0),
    ("III", 4): (0.5, 0.5, 0.5, 1.0),
    ("I", 8): (0.0,) * 7 + (1.0,),
    ("II", 8): (0.5,) + (0.0,) * 6 + (1.0,),
    ("III", 8): (0.1,) * 7 + (1.0,),
}


def standard_proportions(label: str, m: int) -> tuple:
    """Withdrawal proportions for the three named study schemes (m = 4 or 8)."""
    try:
        return _STANDARD_SCHEMES[(label.upper(), m)]
    except KeyError:
        raise ValueError(f"no standard scheme {label!r} with {m} intervals") from None


def generate_sample(
    params: WeibullParams,
    scheme: CensoringScheme,
    n: int,
    rng: np.random.Generator,
    rounding: str = "floor",
) -> CensoredSample:
    """Draw one progressively interval-censored sample of ``n`` units.

    Failures in each interval are binomial draws with the conditional
    failure probability given survival to the interval's left edge;
    withdrawals then remove ``p_i`` of the remaining survivors.  Counts
    always add up to ``n``; with the final proportion equal to 1 nothing
    survives past the last boundary.  A draw with zero failures overall is
    possible and left to the caller's rejection policy.

    ``rounding`` selects how fractional withdrawal targets are resolved:
    ``"floor"`` (default) or ``"round"``.
    """
    if n < 1:
        raise ValueError(f"need at least one unit, got n = {n}")
    if rounding not in ("floor", "round"):
        raise ValueError(f"unknown rounding policy {rounding!r}")
    round_fn = math.floor if rounding == "floor" else round
    kappa, tau = params.kappa, params.tau
    at_risk = int(n)
    failures = []
    withdrawals = []
    s_prev = 0.0
    last = scheme.m - 1
    for i, t_i in enumerate(scheme.boundaries):
        s_i = _power(t_i, kappa)
        q = -math.expm1(-tau * (s_i - s_prev))
        x = int(rng.binomial(at_risk, q)) if at_risk > 0 else 0
        survivors = at_risk - x
        if i == last:
            w = survivors
        else:
            w = min(survivors, int(round_fn(scheme.proportions[i] * survivors)))
        failures.append(x)
        withdrawals.append(w)
        at_risk = survivors - w
        s_prev = s_i
    return CensoredSample(
        boundaries=scheme.boundaries, failures=failures, withdrawals=withdrawals, n=n
    )


def f_hat_moments(sample: CensoredSample) -> np.ndarray:
    """Nonparametric cdf estimate at each boundary, moments-approximation form.

    Defined for every valid sample, including ones with zero failures in
    some (or all) intervals, and always strictly inside (0, 1).  Each factor
    shrinks the raw hazard toward the prior mean of a beta update whose
    pseudo-count grows with the factor's position, which is what keeps the
    estimate away from 0 and 1.
    """
    m = sample.m
    x = sample.failures.astype(float)
    tail = (sample.failures + sample.withdrawals).astype(float)[::-1].cumsum()[::-1]
    f_hat = np.empty(m)
    for i in range(1, m + 1):
        prod = 1.0
        for j in range(m - i + 1, m + 1):
            r = m - j  # 0-based interval index paired with position j
            prod *= (tail[r] - x[r] + j) / (tail[r] + j + 1.0)
        f_hat[i - 1] = 1.0 - prod
    return f_hat


def f_hat_km(sample: CensoredSample) -> np.ndarray:
    """Product-limit cdf estimate at each boundary.

    Raises :class:`EstimationError` when the estimate is unusable for
    regression on the log-log scale: a zero first-interval failure count
    pins the first value to 0, and an exhausted risk set pins a value to 1.
    """
    if sample.failures[0] == 0:
        raise EstimationError(
            "product-limit estimate undefined: no failures in the first interval"
        )
    at_risk = float(sample.n)
    survival = 1.0
    out = np.empty(sample.m)
    for j in range(sample.m):
        survival *= 1.0 - sample.failures[j] / at_risk
        out[j] = 1.0 - survival
        if out[j] >= 1.0:
            raise EstimationError(
                "product-limit estimate reached 1: risk set exhausted at "
                f"interval {j + 1}"
            )
        at_risk -= float(sample.failures[j] + sample.withdrawals[j])
    return out


def _power(base: float, kappa: float) -> float:
    """base**kappa for base >= 0, saturating at inf instead of overflowing."""
    if base <= 0.0:
        return 0.0
    exponent = kappa * math.log(base)
    return math.inf if exponent > 709.0 else math.exp(exponent)


def _pseudo_loglik_tau(sample: CensoredSample, kappa: float) -> float:
    """Rate that maximizes the midpoint pseudo-likelihood at a fixed shape."""
    total_x = 0.0
    denom = 0.0
    t_prev = 0.0
    for t_i, x_i, w_i in zip(sample._t, sample._x, sample._w):
        mid = 0.5 * (t_prev + t_i)
        denom += x_i * _power(mid, kappa) + w_i * _power(t_i, kappa)
        total_x += x_i
        t_prev = t_i
    return total_x / denom


def midpoint_initial_estimates(sample: CensoredSample) -> WeibullParams:
    """Starting values from treating failures as exact at interval midpoints.

    Withdrawn units are treated as right-censored at their boundary.  The
    rate has a closed form given the shape, so only the shape is searched,
    over a bounded bracket.  Requires at least one observed failure.
    """
    if sample.total_failures == 0:
        raise EstimationError("midpoint initialization requires at least one failure")

    def negative_profile(kappa: float) -> float:
        tau = _pseudo_loglik_tau(sample, kappa)
        if not (tau > 0.0 and math.isfinite(tau)):
            return math.inf
        log_k, log_tau = math.log(kappa), math.log(tau)
        t_prev = 0.0
        value = 0.0
        for t_i, x_i, w_i in zip(sample._t, sample._x, sample._w):
            mid = 0.5 * (t_prev + t_i)
            if x_i:
                value += x_i * (
                    log_k
                    + log_tau
                    + (kappa - 1.0) * math.log(mid)
                    - tau * _power(mid, kappa)
                )
            value -= tau * w_i * _power(t_i, kappa)
            t_prev = t_i
        return -value if math.isfinite(value) else math.inf

    result = minimize_scalar(
        negative_profile,
        bounds=KAPPA_SEARCH_BOUNDS,
        method="bounded",
        options={"xatol": 1e-8},
    )
    kappa = float(result.x)
    return WeibullParams(kappa=kappa, tau=_pseudo_loglik_tau(sample, kappa))


def implied_proportions(sample: CensoredSample) -> tuple:
    """Withdrawal proportions recovered from observed counts; last is 1."""
    at_risk = sample.n
    props = []
    for x_i, w_i in zip(sample.failures, sample.withdrawals):
        survivors = at_risk - int(x_i)
        props.append(float(w_i) / survivors if survivors > 0 else 0.0)
        at_risk = survivors - int(w_i)
    props[-1] = 1.0
    return tuple(props)


def read_sample(path) -> CensoredSample:
    """Load a sample from a ``.json`` or ``.csv`` file.

    JSON holds an object with keys ``t``, ``X``, ``W`` and ``n``.  CSV has a
    ``t,X,W`` header and one row per interval; ``n`` is the total count.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise ValueError(f"{path}: file is empty")
    if path.suffix.lower() == ".csv":
        rows = list(csv.DictReader(text.splitlines()))
        if not rows or set(rows[0]) < {"t", "X", "W"}:
            raise ValueError(f"{path}: expected a CSV with header t,X,W")
        try:
            t = [float(r["t"]) for r in rows]
            x = [int(r["X"]) for r in rows]
            w = [int(r["W"]) for r in rows]
        except (TypeError, ValueError) as err:
            raise ValueError(f"{path}: bad CSV value ({err})") from None
        return CensoredSample(boundaries=t, failures=x, withdrawals=w, n=sum(x) + sum(w))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValueError(f"{path}: not valid JSON ({err})") from None
    return CensoredSample.from_dict(data)


def write_sample(sample: CensoredSample, path) -> None:
    """Write a sample as JSON or CSV, chosen by the path's suffix."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "X", "W"])
            for t, x, w in zip(sample.boundaries, sample.failures, sample.withdrawals):
                writer.writerow([t, int(x), int(w)])
    else:
        path.write_text(json.dumps(sample.to_dict(), indent=2) + "\n", encoding="utf-8")
