import math

import numpy as np
import pytest
from scipy import stats

from dcc.core import Dataset
from dcc.errors import (
    AcceptanceOutOfRange,
    DegenerateStart,
    InvalidConfig,
    Underdispersed,
    ZeroVariance,
)
from dcc.harness.datasets import embedded_dataset
from dcc.inference import (
    MetropolisHastingsSampler,
    PmmhSampler,
    metropolis_hastings,
    mh_weight_sampler,
    mle_ar1,
    mle_gaussian,
    mle_negbin,
    mle_poisson,
    mle_polyreg,
    pmmh_weight_sampler,
)
from dcc.models import (
    GaussianIidModel,
    KangarooSsmModel,
    LinearAr1Model,
    NegBinomialModel,
    PoissonModel,
    PolyRegressionModel,
)


class TestMle:
    def test_gaussian(self, rng):
        assert mle_gaussian(Dataset(np.array([[-1.0], [1.0]]))) == pytest.approx((0.0, 1.0))
        with pytest.raises(ZeroVariance):
            mle_gaussian(np.full(3, 2.5))
        mu, var = mle_gaussian(rng.normal(3, 2, 10_000))
        assert mu == pytest.approx(3, abs=0.05) and var == pytest.approx(4, abs=0.15)

    def test_poisson(self):
        assert mle_poisson(embedded_dataset("earthquake-m8")) == pytest.approx(32 / 38)
        assert mle_poisson([7.0]) == 7.0
        assert mle_poisson(np.full(5, 2.0)) == 2.0

    def test_negbin(self, rng):
        r, p = mle_negbin(rng.negative_binomial(2, 0.3, 10_000).astype(float))
        assert r == pytest.approx(2, abs=0.15) and p == pytest.approx(0.3, abs=0.02)
        with pytest.raises(Underdispersed):
            mle_negbin(np.array([1.0, 2.0, 1.0, 2.0]))

    def test_negbin_is_stationary_point(self, rng):
        y = rng.negative_binomial(3.5, 0.4, 500).astype(float)
        r, p = mle_negbin(y)
        nll = lambda q: -stats.nbinom.logpmf(y, q[0], q[1]).sum()
        for d in ([1e-3, 0], [-1e-3, 0], [0, 1e-4], [0, -1e-4]):
            assert nll([r, p]) <= nll(np.array([r, p]) + d)

    def test_polyreg(self):
        x = np.linspace(-3, 3, 20)
        y = 1.5 - 2 * x + 0.25 * x ** 3
        beta, var = mle_polyreg(y, x, 3)
        np.testing.assert_allclose(beta, [1.5, -2, 0, 0.25], atol=1e-10)
        assert var <= 1e-18 * np.mean(y ** 2)
        y = np.array([1.0, 4.0, 2.0, 7.0])
        beta, var = mle_polyreg(y, np.arange(4.0), 0)
        assert beta[0] == pytest.approx(y.mean())
        assert var == pytest.approx(mle_gaussian(y)[1])

    def test_ar1(self, rng):
        n = 100_000
        e = rng.standard_normal(n)
        y = np.empty(n)
        y[0] = e[0] / math.sqrt(1 - 0.49)
        for i in range(1, n):
            y[i] = 0.7 * y[i - 1] + e[i]
        a, var = mle_ar1(y)
        assert a == pytest.approx(0.7, abs=0.01) and var == pytest.approx(1, abs=0.02)
        assert abs(mle_ar1(rng.standard_normal(2000))[0]) < 3 / math.sqrt(2000)


def test_mh_detailed_balance_two_states():
    pi = np.array([0.3, 0.7])
    kept, _, _ = metropolis_hastings(lambda x: math.log(pi[x]), 0, lambda x, r: 1 - x,
                                     100_000, 0, 1, np.random.default_rng(4))
    s = np.array(kept)
    assert s.mean() == pytest.approx(0.7, abs=0.01)
    up = np.count_nonzero((s[:-1] == 0) & (s[1:] == 1))
    down = np.count_nonzero((s[:-1] == 1) & (s[1:] == 0))
    assert abs(up - down) <= 1


def test_mh_matches_conjugate_posterior():
    y = np.random.default_rng(21).normal(1.0, 2.0, 100)
    n, ybar = y.size, y.mean()
    S = np.sum((y - ybar) ** 2)
    mh = MetropolisHastingsSampler(GaussianIidModel(), Dataset(y[:, None]), burn_in=2000, thin=20)
    draws = mh.draw(5000, np.random.default_rng(22))
    # flat prior on (mu, var): var ~ InvGamma((n-3)/2, S/2), mu ~ t_{n-3}
    var_post = stats.invgamma((n - 3) / 2, scale=S / 2)
    mu_post = stats.t(n - 3, loc=ybar, scale=math.sqrt(S / (n * (n - 3))))
    assert stats.kstest(draws[:, 1], var_post.cdf).statistic < 0.05
    assert stats.kstest(draws[:, 0], mu_post.cdf).statistic < 0.05


def test_unconstrained_flat_prior_shifts_variance():
    y = np.random.default_rng(21).normal(1.0, 2.0, 100)
    S = np.sum((y - y.mean()) ** 2)
    mh = MetropolisHastingsSampler(GaussianIidModel(), Dataset(y[:, None]), burn_in=2000,
                                   thin=20, jacobian=False)
    draws = mh.draw(5000, np.random.default_rng(22))
    # flat in log var adds a 1/var factor: shape (n-1)/2
    assert stats.kstest(draws[:, 1], stats.invgamma(99 / 2, scale=S / 2).cdf).statistic < 0.05


def test_tiny_proposal_warns_and_barely_moves(rng):
    data = Dataset(rng.normal(size=(50, 1)))
    mh = MetropolisHastingsSampler(GaussianIidModel(), data, scale=1e-9, burn_in=10, thin=1)
    with pytest.warns(AcceptanceOutOfRange):
        draws = mh.draw(200, rng)
    assert mh.diagnostics["acceptance_rate"] > 0.9
    np.testing.assert_allclose(draws, np.tile(mh.start, (200, 1)), rtol=1e-6)


def test_empty_space_gives_point_sampler(rng):
    w = mh_weight_sampler(GaussianIidModel(free=False), Dataset(rng.normal(size=(5, 1))))
    assert w.draw(4, rng).shape == (4, 0)


def test_mh_rejects_bad_inputs():
    data = embedded_dataset("kangaroo")
    with pytest.raises(InvalidConfig):
        MetropolisHastingsSampler(KangarooSsmModel(), data)
    with pytest.raises(InvalidConfig):
        MetropolisHastingsSampler(PoissonModel(), embedded_dataset("earthquake-m8"), scale=0.0)
    with pytest.raises(DegenerateStart):
        MetropolisHastingsSampler(PoissonModel(), Dataset(np.zeros((5, 1))))


@pytest.mark.parametrize("model,data", [
    (PoissonModel(), embedded_dataset("earthquake-m7")),
    (NegBinomialModel(), embedded_dataset("earthquake-m6")),
    (NegBinomialModel(), embedded_dataset("earthquake-m8")),
    (LinearAr1Model(), Dataset(np.random.default_rng(1).normal(size=(30, 1)))),
    (PolyRegressionModel(2), embedded_dataset("regression-cubic")),
], ids=lambda v: getattr(v, "name", ""))
def test_mh_draws_stay_in_parameter_space(model, data, rng):
    draws = mh_weight_sampler(model, data, burn_in=200, thin=2).draw(300, rng)
    assert draws.shape == (300, model.param_space.dim)
    assert all(model.param_space.contains(th) for th in draws)


def _geweke(x, first=0.1, last=0.5, batches=10):
    def mean_se(seg):
        b = np.array_split(seg, batches)
        means = np.array([c.mean() for c in b])
        return seg.mean(), means.std(ddof=1) / math.sqrt(batches)

    n = len(x)
    ma, sa = mean_se(x[: int(first * n)])
    mb, sb = mean_se(x[int((1 - last) * n):])
    return (ma - mb) / math.hypot(sa, sb)


class TestPmmh:
    data = embedded_dataset("kangaroo")

    def test_needs_enough_particles(self):
        with pytest.raises(InvalidConfig):
            PmmhSampler(KangarooSsmModel(), self.data, particles=100)

    def test_minimal_chain(self, rng):
        s = PmmhSampler(KangarooSsmModel(), self.data, particles=500, burn_in=0, thin=1,
                        start=[0.3, 0.1], factor=0.1 * np.eye(2))
        assert s.evaluations == 0
        draws = s.draw(1, rng)
        assert draws.shape == (1, 2)
        assert s.evaluations == 2 and s.diagnostics["steps"] == 1
        phi = np.log(draws[0])
        start = np.log([0.3, 0.1])
        # either the start was kept or one proposal step was accepted
        assert np.allclose(phi, start) or np.linalg.norm(phi - start) < 1.0

    def test_chain_mixes_on_bundled_data(self):
        s = pmmh_weight_sampler(KangarooSsmModel(), self.data, particles=2000, burn_in=300,
                                thin=2)
        draws = s.draw(600, np.random.default_rng(17))
        assert np.all(draws > 0)
        logs = np.log(draws)
        assert np.all(logs.std(axis=0) > 0.01)
        for k in range(2):
            assert abs(_geweke(logs[:, k])) < 3

    @pytest.mark.slow
    def test_acceptance_insensitive_to_particle_count(self):
        base = PmmhSampler(KangarooSsmModel(), self.data, particles=2000, burn_in=100, thin=1)
        rates = []
        for k in (2000, 8000):
            s = PmmhSampler(KangarooSsmModel(), self.data, particles=k, burn_in=100, thin=1,
                            start=base.space.from_unconstrained(base.phi0), factor=base.factor)
            s.draw(1500, np.random.default_rng(k))
            rates.append(s.diagnostics["acceptance_rate"])
        assert abs(rates[0] - rates[1]) <= 0.1
