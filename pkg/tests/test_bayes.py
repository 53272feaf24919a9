import math

import numpy as np
import pytest

from weibullcv import (
    CensoredSample,
    McmcChain,
    Prior,
    WeibullParams,
    bayes_estimate,
    hpdi,
    log_likelihood,
    log_posterior,
    percentile_interval,
    rwmh,
    tune_sigma,
)
from weibullcv.bayes import ACCEPTANCE_BAND, _log_posterior


def make_chain(states):
    states = np.asarray(states, dtype=float)
    return McmcChain(
        states=states, M=len(states), M_b=0, thin=1, acceptance_rate=1.0
    )


def posterior_grid(sample, prior, kappa_range, tau_range, resolution=250):
    """Dense-grid quadrature of the unnormalized posterior."""
    kg = np.linspace(*kappa_range, resolution)
    tg = np.linspace(*tau_range, resolution)
    log_density = np.empty((resolution, resolution))
    for i, kv in enumerate(kg):
        for j, tv in enumerate(tg):
            log_density[i, j] = _log_posterior(kv, tv, sample, prior)
    log_density -= log_density.max()
    density = np.exp(log_density)
    return kg, tg, density / density.sum()


class TestPrior:
    def test_noninformative_constructor(self):
        prior = Prior.noninformative()
        assert prior.jeffreys
        assert (prior.a1, prior.a2, prior.b1, prior.b2) == (0.0, 0.0, 0.0, 0.0)

    def test_flag_requires_zero_hyperparameters(self):
        with pytest.raises(ValueError):
            Prior(a1=1.0, a2=0.0, b1=1.0, b2=0.0, jeffreys=True)

    def test_all_zero_requires_flag(self):
        with pytest.raises(ValueError):
            Prior(0.0, 0.0, 0.0, 0.0)

    def test_negative_hyperparameters_rejected(self):
        with pytest.raises(ValueError):
            Prior(a1=-1.0, a2=1.0, b1=1.0, b2=1.0)

    @pytest.mark.parametrize("a1,a2,mean", [(3.0, 4.0, 0.75), (5.0, 4.0, 1.25)])
    def test_study_hyperparameters_match_shape_truth(self, a1, a2, mean):
        prior = Prior(a1=a1, a2=a2, b1=1.0, b2=2.0)
        assert prior.a1 / prior.a2 == mean

    @pytest.mark.parametrize("b1,b2,mean", [(0.5, 10.0, 0.05), (1.0, 2.0, 0.5)])
    def test_study_hyperparameters_match_rate_truth(self, b1, b2, mean):
        prior = Prior(a1=3.0, a2=4.0, b1=b1, b2=b2)
        assert prior.b1 / prior.b2 == mean


class TestLogPosterior:
    def test_flat_gamma_equals_log_likelihood(self, real_sample):
        prior = Prior(a1=1.0, a2=0.0, b1=1.0, b2=0.0)
        params = WeibullParams(1.3, 0.05)
        assert log_posterior(params, real_sample, prior) == log_likelihood(
            params, real_sample
        )

    def test_noninformative_at_unit_point(self, real_sample):
        params = WeibullParams(1.0, 1.0)
        assert log_posterior(
            params, real_sample, Prior.noninformative()
        ) == log_likelihood(params, real_sample)

    def test_ratio_matches_direct_density_ratio(self):
        # densities are representable for a tiny sample, so the ratio can be
        # formed directly from exponentiated pieces
        sample = CensoredSample(boundaries=(1.0,), failures=(2,), withdrawals=(1,), n=3)
        prior = Prior(a1=2.0, a2=1.0, b1=2.0, b2=1.0)

        def direct_density(kappa, tau):
            prior_part = (
                kappa ** (prior.a1 - 1.0)
                * tau ** (prior.b1 - 1.0)
                * math.exp(-prior.a2 * kappa - prior.b2 * tau)
            )
            d = 1.0**kappa
            lik = (math.exp(tau * d) - 1.0) ** 2 * math.exp(-tau * 3.0 * d)
            return prior_part * lik

        one = WeibullParams(1.2, 0.8)
        two = WeibullParams(0.7, 1.4)
        log_ratio = log_posterior(one, sample, prior) - log_posterior(two, sample, prior)
        assert math.exp(log_ratio) == pytest.approx(
            direct_density(1.2, 0.8) / direct_density(0.7, 1.4), rel=1e-12
        )

    def test_inadmissible_is_minus_infinity(self, real_sample):
        assert _log_posterior(-1.0, 0.5, real_sample, Prior.noninformative()) == -math.inf
        assert _log_posterior(1.0, 0.0, real_sample, Prior.noninformative()) == -math.inf


class TestSampler:
    def test_vanishing_proposal_accepts_everything(self, real_sample):
        chain = rwmh(
            real_sample,
            Prior.noninformative(),
            M=2000,
            M_b=0,
            sigma=np.diag([1e-20, 1e-20]),
            rng=np.random.default_rng(30),
            init=WeibullParams(1.2, 0.02),
        )
        assert chain.acceptance_rate > 0.999
        assert np.ptp(chain.states[:, 0]) < 1e-7
        assert np.ptp(chain.states[:, 1]) < 1e-7

    def test_real_data_acceptance_band_with_published_proposal(self, real_sample):
        chain = rwmh(
            real_sample,
            Prior.noninformative(),
            M=100_000,
            M_b=5_000,
            sigma=np.diag([5e-5, 5e-5]),
            thin=50,
            rng=np.random.default_rng(31),
        )
        assert chain.acceptance_rate == pytest.approx(0.345, abs=0.05)

    def test_posterior_mean_matches_quadrature(self, real_sample):
        from weibullcv import covariance, newton_raphson, observed_information

        prior = Prior.noninformative()
        kg, tg, weight = posterior_grid(
            real_sample, prior, (0.8, 1.8), (0.003, 0.06), resolution=220
        )
        exact_kappa = float((kg[:, None] * weight).sum())
        exact_tau = float((tg[None, :] * weight).sum())
        # a proposal scaled to the asymptotic covariance mixes well, which is
        # what lets a single chain pin the mean this tightly
        fit = newton_raphson(real_sample)
        sigma = 2.83 * covariance(observed_information(fit.params, real_sample))
        chain = rwmh(
            real_sample,
            prior,
            M=200_000,
            M_b=10_000,
            sigma=sigma,
            thin=10,
            rng=np.random.default_rng(32),
        )
        estimate = bayes_estimate(chain)
        assert estimate.kappa == pytest.approx(exact_kappa, abs=0.02)
        assert estimate.tau == pytest.approx(exact_tau, abs=0.002)

    def test_states_always_admissible(self, real_sample):
        chain = rwmh(
            real_sample,
            Prior.noninformative(),
            M=5_000,
            M_b=0,
            sigma=np.diag([0.05, 0.001]),
            rng=np.random.default_rng(33),
        )
        assert np.all(chain.states[:, 0] > 0.0)
        assert np.all(chain.states[:, 1] > 0.0)

    def test_retained_count_bookkeeping(self, real_sample):
        chain = rwmh(
            real_sample,
            Prior.noninformative(),
            M=10,
            M_b=3,
            sigma=np.diag([1e-4, 1e-4]),
            thin=2,
            rng=np.random.default_rng(34),
        )
        assert chain.retained == (10 - 3) // 2

    def test_validation(self, real_sample):
        prior = Prior.noninformative()
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="positive definite"):
            rwmh(real_sample, prior, M=10, M_b=0, sigma=[[1.0, 2.0], [2.0, 1.0]], rng=rng)
        with pytest.raises(ValueError, match="M_b"):
            rwmh(real_sample, prior, M=10, M_b=10, sigma=np.eye(2), rng=rng)
        with pytest.raises(ValueError, match="thin"):
            rwmh(real_sample, prior, M=10, M_b=0, sigma=np.eye(2), thin=0, rng=rng)
        with pytest.raises(ValueError, match="density"):
            rwmh(
                real_sample,
                prior,
                M=10,
                M_b=0,
                sigma=np.eye(2),
                rng=rng,
                init=WeibullParams(500.0, 1.0),
            )

    def test_detailed_balance_against_quadrature(self):
        # two-state discretization: the chain's time in each half-space must
        # match the quadrature mass of the target
        sample = CensoredSample(
            boundaries=(1.0, 2.5), failures=(6, 5), withdrawals=(0, 4), n=15
        )
        prior = Prior.noninformative()
        kg, tg, weight = posterior_grid(
            sample, prior, (0.05, 4.0), (0.005, 1.2), resolution=300
        )
        kappa_marginal = weight.sum(axis=1)
        split = 1.0
        target_low = float(kappa_marginal[kg <= split].sum())
        chain = rwmh(
            sample,
            prior,
            M=1_000_000,
            M_b=20_000,
            sigma=np.array([[0.25, 0.0], [0.0, 0.02]]),
            rng=np.random.default_rng(35),
        )
        empirical_low = float(np.mean(chain.states[:, 0] <= split))
        assert abs(empirical_low - target_low) < 0.02


class TestBayesEstimate:
    def test_constant_chain(self):
        chain = make_chain([[2.0, 0.5, 0.8, 0.6]] * 7)
        estimate = bayes_estimate(chain)
        assert (estimate.kappa, estimate.tau) == (2.0, 0.5)

    def test_two_state_mean(self):
        chain = make_chain([[1.0, 1.0, 1.0, 1.0], [3.0, 3.0, 3.0, 3.0]])
        estimate = bayes_estimate(chain)
        assert estimate.kappa == estimate.tau == 2.0

    def test_matches_two_pass_mean(self, real_sample):
        chain = rwmh(
            real_sample,
            Prior.noninformative(),
            M=3_000,
            M_b=500,
            sigma=np.diag([1e-3, 1e-6]),
            rng=np.random.default_rng(36),
        )
        estimate = bayes_estimate(chain)
        two_pass = math.fsum(chain.states[:, 0]) / chain.retained
        assert estimate.kappa == pytest.approx(two_pass, abs=1e-12)
        assert estimate.kappa == pytest.approx(
            float(chain.column("kappa").mean()), abs=1e-12
        )

    def test_empty_chain_rejected(self):
        with pytest.raises(ValueError, match="retained"):
            bayes_estimate(make_chain(np.empty((0, 4))))


class TestHpdi:
    def test_uniform_spacing_tie_break(self):
        values = np.arange(1.0, 101.0)
        interval = hpdi(values, 0.95)
        assert interval.lower == 1.0
        assert interval.upper == 96.0

    def test_narrower_than_percentile_interval_on_skewed_sample(self):
        rng = np.random.default_rng(37)
        values = rng.lognormal(mean=0.0, sigma=0.7, size=5000)
        shortest = hpdi(values, 0.95)
        central = percentile_interval(values, 0.95)
        assert shortest.width <= central.width

    def test_short_input_rejected(self):
        with pytest.raises(ValueError, match="draws"):
            hpdi(np.arange(15), 0.95)

    def test_matches_exhaustive_window_search(self):
        rng = np.random.default_rng(38)
        for _ in range(50):
            values = np.sort(rng.normal(size=1000))
            level = float(rng.uniform(0.8, 0.99))
            interval = hpdi(values, level)
            span = int(math.floor(values.size * level))
            best = min(
                (values[h + span] - values[h], h) for h in range(values.size - span)
            )
            assert interval.lower == values[best[1]]
            assert interval.upper == values[best[1] + span]


class TestTuneSigma:
    def test_in_band_proposal_returned_unchanged(self, real_sample):
        prior = Prior.noninformative()
        tuned = tune_sigma(
            real_sample, prior, pilot_M=2000, rng=np.random.default_rng(39)
        )
        again = tune_sigma(
            real_sample,
            prior,
            pilot_M=2000,
            rng=np.random.default_rng(40),
            sigma0=tuned,
        )
        np.testing.assert_array_equal(again, tuned)

    def test_oversized_proposal_shrinks_into_band(self, real_sample):
        prior = Prior.noninformative()
        tuned = tune_sigma(
            real_sample,
            prior,
            pilot_M=2000,
            rng=np.random.default_rng(41),
            sigma0=np.diag([100.0, 100.0]),
        )
        assert tuned[0, 0] < 100.0
        # an independent pilot-length chain lands near the tuning band
        chain = rwmh(
            real_sample,
            prior,
            M=4000,
            M_b=0,
            sigma=tuned,
            rng=np.random.default_rng(42),
        )
        low, high = ACCEPTANCE_BAND
        assert low - 0.1 <= chain.acceptance_rate <= high + 0.1

    def test_default_start_terminates_in_band(self, real_sample):
        prior = Prior.noninformative()
        tuned = tune_sigma(
            real_sample, prior, pilot_M=2000, rng=np.random.default_rng(43)
        )
        chain = rwmh(
            real_sample,
            prior,
            M=4000,
            M_b=0,
            sigma=tuned,
            rng=np.random.default_rng(44),
        )
        low, high = ACCEPTANCE_BAND
        assert low - 0.1 <= chain.acceptance_rate <= high + 0.1

    def test_short_pilot_rejected(self, real_sample):
        with pytest.raises(ValueError, match="1000"):
            tune_sigma(
                real_sample,
                Prior.noninformative(),
                pilot_M=10,
                rng=np.random.default_rng(0),
            )


class TestChainExport:
    def test_csv_layout(self, real_sample, tmp_path):
        chain = rwmh(
            real_sample,
            Prior.noninformative(),
            M=500,
            M_b=100,
            sigma=np.diag([1e-4, 1e-8]),
            thin=10,
            rng=np.random.default_rng(45),
        )
        path = tmp_path / "chain.csv"
        chain.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iter,kappa,tau,cv_p,cv_k"
        assert len(lines) == 1 + chain.retained
        assert lines[1].split(",")[0] == "110"  # first retained iteration
