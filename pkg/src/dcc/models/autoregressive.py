"""First-order autoregressive model class and the saturated AR(1) generator."""

import numpy as np
from scipy.signal import lfilter

from dcc.core import Coordinate, ModelClass, ParamSpace
from dcc.errors import NonPositiveVariance, NonStationaryCoefficient
from dcc.models.densities import gaussian_logpdf


def ar1_incremental_logliks(theta, points) -> np.ndarray:
    """Conditional log-densities of an AR(1) path, stationary start.

    ``points`` has shape ``(..., n)``; the first value is scored under
    N(0, var / (1 - a^2)), each later one under N(a * previous, var).
    """
    a, var = float(theta[0]), float(theta[1])
    if not abs(a) < 1:
        raise NonStationaryCoefficient(f"|a| must be < 1, got a={a}")
    if not var > 0:
        raise NonPositiveVariance("innovation variance must be positive")
    y = np.asarray(points, dtype=float)
    out = np.empty_like(y)
    out[..., 0] = gaussian_logpdf(y[..., 0], 0.0, var / (1 - a * a))
    out[..., 1:] = gaussian_logpdf(y[..., 1:], a * y[..., :-1], var)
    return out


def ar1_residuals(y, a: float) -> np.ndarray:
    """One-step prediction errors ``y_i - a y_{i-1}`` for i >= 2."""
    y = np.asarray(y, dtype=float)
    return y[1:] - a * y[:-1]


class LinearAr1Model(ModelClass):
    name = "ar1"
    data_dim = 1
    _space = ParamSpace.of(Coordinate("a", "unit"), Coordinate("var", "positive"))

    @property
    def param_space(self):
        return self._space

    def simulate_batch(self, theta, template, size, rng):
        a, var = float(theta[0]), float(theta[1])
        e = np.sqrt(var) * rng.standard_normal((size, template.n))
        e[:, 0] /= np.sqrt(1 - a * a)
        return lfilter([1.0], [1.0, -a], e, axis=1)[..., None]

    def logliks_batch(self, theta, points, template, rng=None):
        return ar1_incremental_logliks(theta, points[..., 0])


class SaturatedAr1Generator:
    """Data generator ``y_i = max(coef * y_{i-1} + e_i, floor)`` with ``y_0 = 0``.

    Generator only: it has no likelihood and is used as the true process that
    the linear AR(1) class is checked against.
    """

    def __init__(self, coef: float = 0.7, floor: float = -0.3, noise_sd: float = 1.0):
        self.coef = coef
        self.floor = floor
        self.noise_sd = noise_sd

    def sample(self, n: int, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        e = self.noise_sd * rng.standard_normal((size, n))
        y = np.empty((size, n))
        prev = np.zeros(size)
        for i in range(n):
            prev = np.maximum(self.coef * prev + e[:, i], self.floor)
            y[:, i] = prev
        return y
