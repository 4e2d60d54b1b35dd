import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcc.core import Dataset, DccConfig
from dcc.engine import (
    MomentEstimates,
    calibrate_threshold,
    calibrated_criterion_values,
    criterion,
    criterion_from_counts,
    dcc,
    estimate_moments,
    exceedance_count,
    moments_from_samples,
    pfa_u_for_theta,
    statistic_T,
    threshold_exact,
)
from dcc.errors import DegenerateVariance, InvalidConfig, LengthMismatch
from dcc.harness.datasets import embedded_dataset
from dcc.inference import PointSampler, weights_for
from dcc.models import GaussianIidModel, PoissonModel
from dcc.models.densities import poisson_logpmf

FIXED = GaussianIidModel(free=False)
FREE = GaussianIidModel()


def _moments(means, variances):
    return MomentEstimates(np.asarray(means, float), np.asarray(variances, float), 10)


class TestStatistic:
    def test_zero_deviation(self):
        m = _moments([1.0, -2.0, 3.0], [1.0, 2.0, 3.0])
        assert statistic_T(m.means, m) == 0.0

    def test_unit_deviations(self):
        m = _moments([0.5, -1.0], [4.0, 9.0])
        assert statistic_T([2.5, -4.0], m) == pytest.approx(1.0)

    def test_arithmetic(self):
        assert statistic_T([1, -2, 2], _moments([0, 0, 0], [1, 4, 1])) == pytest.approx(2.0)

    def test_batched(self):
        m = _moments([0, 0, 0], [1, 4, 1])
        np.testing.assert_allclose(statistic_T([[1, -2, 2], [0, 0, 0]], m), [2.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            statistic_T([1.0], _moments([0, 0], [1, 1]))

    def test_degenerate(self):
        with pytest.raises(DegenerateVariance):
            statistic_T([1.0, 1.0], _moments([0, 0], [1, 0]))
        with pytest.raises(DegenerateVariance):
            moments_from_samples(np.full((20, 3), 4.2))


class TestMoments:
    def test_standard_normal(self, rng):
        m = estimate_moments(FIXED, np.empty(0), Dataset(np.zeros((3, 1))), 100_000, rng)
        np.testing.assert_allclose(m.means, -0.5 * math.log(2 * math.pi) - 0.5, atol=0.01)
        np.testing.assert_allclose(m.variances, 0.5, atol=0.01)

    def test_poisson_against_pmf_sum(self, rng):
        lam = 0.842
        y = np.arange(51)
        lp = poisson_logpmf(y, lam)
        mean = np.sum(np.exp(lp) * lp)
        var = np.sum(np.exp(lp) * lp ** 2) - mean ** 2
        m = estimate_moments(PoissonModel(), [lam], Dataset(np.zeros((38, 1))), 200, rng)
        # four standard errors of a 200-sample mean
        np.testing.assert_allclose(m.means, mean, atol=4 * math.sqrt(var / 200))
        pooled = estimate_moments(PoissonModel(), [lam], Dataset(np.zeros((38, 1))), 200, rng,
                                  pool_iid=True)
        assert pooled.means[0] == pytest.approx(mean, abs=4 * math.sqrt(var / 7600))
        assert np.ptp(pooled.means) == 0

    def test_needs_two_datasets(self, rng):
        with pytest.raises(InvalidConfig):
            estimate_moments(FIXED, np.empty(0), Dataset(np.zeros((3, 1))), 1, rng)


class TestPfa:
    def test_observed_at_means(self, rng):
        # y = 1 gives z = -ln(2pi)/2 - 1/2, the exact mean, so T_obs = 0
        obs = Dataset(np.ones((20, 1)))
        m = estimate_moments(FIXED, np.empty(0), obs, 50_000, rng)
        assert statistic_T(FIXED.incremental_logliks(np.empty(0), obs), m) < 1e-3
        assert pfa_u_for_theta(FIXED, np.empty(0), obs, 500, 500, rng) > 0.99

    def test_single_indicator(self):
        assert exceedance_count([0.5], 1.0) == 0
        assert exceedance_count([1.5], 1.0) == 1
        assert exceedance_count([1.0], 1.0) == 0

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 10), min_size=1, max_size=30), st.floats(0, 10), st.floats(0, 5))
    def test_monotone_in_observed_statistic(self, sims, t, dt):
        assert exceedance_count(sims, t + dt) <= exceedance_count(sims, t)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 50), min_size=1, max_size=20))
    def test_min_symmetry(self, counts):
        star, crit = criterion_from_counts(counts, 50)
        star_c, crit_c = criterion_from_counts(counts, 50, complement=True)
        assert star_c == pytest.approx(1 - star)
        assert crit_c == pytest.approx(crit)
        assert 0 <= crit <= 0.5 and crit == criterion(star)

    def test_uniform_under_own_model(self):
        from scipy.stats import kstest
        pfa = [pfa_u_for_theta(FIXED, np.empty(0), FIXED.simulate(np.empty(0), Dataset(np.zeros((30, 1))),
                                                                     np.random.default_rng([3, k])),
                               200, 200, np.random.default_rng([4, k])) for k in range(300)]
        assert kstest(pfa, "uniform").pvalue > 0.001


class TestDcc:
    def test_result_fields(self):
        obs = embedded_dataset("earthquake-m8")
        cfg = DccConfig(n_draws=8, m_test=20, m_cal=20, seed=3, weight_mode="point-mle")
        res = dcc(PoissonModel(), weights_for(PoissonModel(), obs, cfg), obs, cfg)
        assert res.pfa_u_per_draw.shape == (8,) and res.thetas.shape == (8, 1)
        assert res.pfa_star_hat == pytest.approx(min(res.pfa_u_star_hat, 1 - res.pfa_u_star_hat))
        assert set(res.to_dict()) >= {"pfa_u_star", "pfa_star", "pfa_u_per_draw", "T_obs_per_draw",
                                      "thetas", "seed", "config"}

    def test_worker_count_does_not_change_result(self):
        obs = embedded_dataset("earthquake-m7")
        cfg = DccConfig(n_draws=12, m_test=30, m_cal=30, seed=11, mh_burn_in=100, mh_thin=2)
        w = weights_for(PoissonModel(), obs, cfg)
        a = dcc(PoissonModel(), w, obs, cfg, workers=1)
        b = dcc(PoissonModel(), w, obs, cfg, workers=4)
        np.testing.assert_array_equal(a.exceed_counts, b.exceed_counts)
        np.testing.assert_array_equal(a.T_obs_per_draw, b.T_obs_per_draw)
        np.testing.assert_array_equal(a.thetas, b.thetas)

    @pytest.mark.parametrize("scale,shift", [(3.0, 2.0), (0.01, -50.0)])
    def test_affine_invariance(self, scale, shift):
        y = np.random.default_rng(8).standard_normal((60, 1)) ** 2
        cfg = DccConfig(n_draws=10, m_test=100, m_cal=100, seed=2, weight_mode="point-mle")
        base = Dataset(y)
        moved = Dataset(scale * y + shift)
        a = dcc(FREE, weights_for(FREE, base, cfg), base, cfg).pfa_u_star_hat
        b = dcc(FREE, weights_for(FREE, moved, cfg), moved, cfg).pfa_u_star_hat
        assert abs(a - b) <= 0.02


class TestThresholds:
    @pytest.mark.parametrize("rho,expected", [(0.10, 0.05), (0.0, 0.0), (1.0, 0.5)])
    def test_exact(self, rho, expected):
        assert threshold_exact(rho) == pytest.approx(expected)

    def test_exact_range(self):
        with pytest.raises(InvalidConfig):
            threshold_exact(1.5)

    def test_too_few_replications(self):
        with pytest.raises(InvalidConfig):
            calibrate_threshold(FIXED, np.empty(0), lambda m, d, c: PointSampler(np.empty(0)),
                                10, 0.1, 50, DccConfig(n_draws=1))

    def test_fixed_class_matches_exact(self):
        cfg = DccConfig(n_draws=1, m_test=200, m_cal=200, seed=5)
        thr = calibrate_threshold(FIXED, np.empty(0), lambda m, d, c: PointSampler(np.empty(0)),
                                  10, 0.10, 2000, cfg)
        assert thr == pytest.approx(threshold_exact(0.10), abs=0.01)

    def test_free_class_exceeds_exact(self):
        cfg = DccConfig(n_draws=50, m_test=100, m_cal=100, seed=6, mh_burn_in=200, mh_thin=2)
        values = calibrated_criterion_values(FREE, [0.0, 1.0], weights_for, 100, 150, cfg)
        assert np.all((values >= 0) & (values <= 0.5))
        assert np.quantile(values, 0.10) > threshold_exact(0.10)
