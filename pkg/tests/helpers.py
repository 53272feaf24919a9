"""Shared construction helpers for the test suite."""

import numpy as np

from weibullcv import CensoredSample, CensoringScheme, WeibullParams, generate_sample


def random_sample(rng, m_max=6, n_max=80, require_failures=True):
    """A structurally valid random censored sample."""
    m = int(rng.integers(1, m_max + 1))
    boundaries = np.cumsum(rng.uniform(0.3, 2.5, size=m))
    while True:
        failures = rng.integers(0, 8, size=m)
        withdrawals = rng.integers(0, 5, size=m)
        n = int(failures.sum() + withdrawals.sum())
        if n == 0:
            continue
        if require_failures and failures.sum() == 0:
            continue
        if n > n_max:
            continue
        return CensoredSample(
            boundaries=boundaries, failures=failures, withdrawals=withdrawals, n=n
        )


def random_admissible_point(rng):
    """Random positive (shape, rate) in a numerically comfortable range."""
    return WeibullParams(
        kappa=float(rng.uniform(0.3, 3.0)), tau=float(rng.uniform(0.01, 1.5))
    )


def simulated_sample(rng, kappa=1.25, tau=0.525, n=150, scheme=None):
    """One generated sample guaranteed to contain at least one failure."""
    if scheme is None:
        scheme = CensoringScheme(
            boundaries=(1.0, 2.0, 3.0, 4.0), proportions=(0.0, 0.0, 0.0, 1.0)
        )
    params = WeibullParams(kappa=kappa, tau=tau)
    while True:
        sample = generate_sample(params, scheme, n, rng)
        if sample.total_failures > 0:
            return sample
