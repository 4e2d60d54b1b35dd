import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcc.core import (
    Coordinate,
    Dataset,
    DccConfig,
    ParamSpace,
    read_csv,
    validate_dataset,
    write_csv,
)
from dcc.errors import (
    EmptyData,
    InvalidConfig,
    NonFiniteValue,
    NonIncreasingTimestamps,
    OutOfParameterSpace,
    RaggedDimensions,
)
from dcc.harness.datasets import embedded_dataset
from dcc.models import (
    GaussianIidModel,
    KangarooSsmModel,
    LinearAr1Model,
    NegBinomialModel,
    PoissonModel,
    PolyRegressionModel,
)
from dcc.models.densities import negbin_logpmf, poisson_logpmf


class TestValidateDataset:
    def test_well_formed(self):
        d = validate_dataset([[1.0], [2.0]])
        assert (d.n, d.d, d.timestamps) == (2, 1, None)

    def test_ragged(self):
        with pytest.raises(RaggedDimensions):
            validate_dataset([[1.0], [2.0, 3.0]])

    def test_empty(self):
        with pytest.raises(EmptyData):
            validate_dataset([])

    def test_non_finite(self):
        with pytest.raises(NonFiniteValue):
            validate_dataset([[1.0], [math.nan]])

    def test_timestamps_must_increase(self):
        with pytest.raises(NonIncreasingTimestamps):
            validate_dataset([[1.0], [2.0]], [1.0, 1.0])

    def test_timestamp_length(self):
        with pytest.raises(NonIncreasingTimestamps):
            validate_dataset([[1.0], [2.0]], [1.0])

    def test_bivariate_with_dates(self):
        ref = embedded_dataset("kangaroo")
        d = validate_dataset(ref.points.tolist(), ref.timestamps.tolist())
        assert (d.n, d.d) == (41, 2)
        assert d.timestamps is not None and np.all(np.diff(d.timestamps) > 0)

    def test_immutable(self):
        d = validate_dataset([[1.0], [2.0]])
        with pytest.raises(ValueError):
            d.points[0, 0] = 5.0


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=20), st.booleans())
def test_csv_round_trip_is_bit_exact(rows, with_t):
    ts = np.cumsum(np.arange(1, len(rows) + 1) * 0.37) if with_t else None
    d = validate_dataset([list(r) for r in rows], ts)
    buf = io.StringIO()
    write_csv(d, buf)
    back = read_csv(io.StringIO(buf.getvalue()))
    assert back == d
    assert back.points.tobytes() == d.points.tobytes()


def test_csv_rejects_garbage():
    with pytest.raises(NonFiniteValue):
        read_csv("y1\nabc\n")
    with pytest.raises(EmptyData):
        read_csv(io.StringIO(""))


SPACE = ParamSpace.of(Coordinate("m"), Coordinate("v", "positive"), Coordinate("a", "unit"),
                      Coordinate("p", "prob"))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-8, 8), min_size=4, max_size=4))
def test_param_space_bijection(phi):
    theta = SPACE.from_unconstrained(phi)
    assert SPACE.contains(theta)
    np.testing.assert_allclose(SPACE.to_unconstrained(theta), phi, rtol=1e-9, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-4, 4), min_size=4, max_size=4))
def test_log_jacobian_matches_finite_differences(phi):
    phi = np.array(phi)
    h = 1e-6
    diag = [(SPACE.from_unconstrained(phi + h * e)[k] - SPACE.from_unconstrained(phi - h * e)[k])
            / (2 * h) for k, e in enumerate(np.eye(4))]
    assert SPACE.log_jacobian(phi) == pytest.approx(np.sum(np.log(diag)), abs=1e-6)


def test_param_space_bounds():
    s = ParamSpace.of(Coordinate("r", "positive", upper=10.0))
    assert s.contains([5.0]) and not s.contains([10.0]) and not s.contains([-1.0])
    with pytest.raises(OutOfParameterSpace):
        s.check([0.0])


class TestDccConfig:
    def test_defaults(self):
        c = DccConfig()
        assert (c.n_draws, c.m_test, c.m_cal) == (200, 200, 200)

    @pytest.mark.parametrize("kw", [dict(n_draws=0), dict(m_test=1), dict(m_cal=1),
                                    dict(weight_mode="nuts"), dict(seed=-1), dict(n_draws=2.5),
                                    dict(mh_scale=0.0), dict(workers=0)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidConfig):
            DccConfig(**kw)


@pytest.mark.parametrize("model,theta", [
    (PoissonModel(), [0.842]), (PoissonModel(), [37.5]),
    (NegBinomialModel(), [2.0, 0.3]), (NegBinomialModel(), [0.4, 0.05]),
])
def test_discrete_pmfs_sum_to_one(model, theta):
    y = np.arange(0, 20000, dtype=float)
    lp = model.logliks_batch(np.array(theta), y[None, :, None], Dataset(y[:, None]))
    assert np.exp(lp).sum() == pytest.approx(1.0, abs=1e-6)


def _fuzz_theta(model, rng):
    names = model.param_space.names
    if isinstance(model, GaussianIidModel):
        return np.array([rng.normal(0, 50), math.exp(rng.uniform(-8, 8))])
    if isinstance(model, PoissonModel):
        return np.array([math.exp(rng.uniform(-6, 8))])
    if isinstance(model, NegBinomialModel):
        return np.array([math.exp(rng.uniform(-4, 8)), rng.uniform(0.001, 0.999)])
    if isinstance(model, LinearAr1Model):
        return np.array([rng.uniform(-0.999, 0.999), math.exp(rng.uniform(-6, 6))])
    if isinstance(model, PolyRegressionModel):
        return np.append(rng.normal(0, 2, len(names) - 1) / 10.0 ** np.arange(len(names) - 1),
                         math.exp(rng.uniform(-4, 6)))
    return np.array([rng.uniform(0.01, 1.99), rng.uniform(0.01, 9.9)])


@pytest.mark.parametrize("model", [GaussianIidModel(), PoissonModel(), NegBinomialModel(),
                                   LinearAr1Model(), PolyRegressionModel(2),
                                   KangarooSsmModel(particles=50)], ids=lambda m: m.name)
def test_simulate_then_score_never_nan(model, rng):
    template = (embedded_dataset("kangaroo") if isinstance(model, KangarooSsmModel)
                else Dataset(np.zeros((12, 1))))
    for _ in range(1000):
        theta = _fuzz_theta(model, rng)
        assert model.param_space.contains(theta)
        sim = model.simulate(theta, template, rng)
        assert sim.points.shape == template.points.shape
        z = model.incremental_logliks(theta, sim, rng)
        assert not np.any(np.isnan(z))


def test_poisson_pmf_direct():
    assert poisson_logpmf(0, 1.0) == pytest.approx(-1.0)
    assert negbin_logpmf(0, 3.0, 0.2) == pytest.approx(3 * math.log(0.2))
