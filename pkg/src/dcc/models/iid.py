"""Model classes with independent, identically distributed scalar points."""

import numpy as np

from dcc.core import Coordinate, ModelClass, ParamSpace
from dcc.models.densities import check_counts, gaussian_logpdf, negbin_logpmf, poisson_logpmf

# Truncation of the negative binomial size parameter. Past this point the
# family is numerically indistinguishable from the Poisson limit.
NEGBIN_R_MAX = 1e6


class GaussianIidModel(ModelClass):
    """N(mu, var) points; ``free=False`` pins the class to the single model N(0, 1)."""

    data_dim = 1

    def __init__(self, free: bool = True):
        self.free = free
        self.name = "gaussian" if free else "gaussian-fixed"
        if free:
            self._space = ParamSpace.of(Coordinate("mu"), Coordinate("var", "positive"))
        else:
            self._space = ParamSpace()

    @property
    def param_space(self):
        return self._space

    def _mu_var(self, theta):
        if self.free:
            return float(theta[0]), float(theta[1])
        return 0.0, 1.0

    def simulate_batch(self, theta, template, size, rng):
        mu, var = self._mu_var(theta)
        return mu + np.sqrt(var) * rng.standard_normal((size, template.n, 1))

    def logliks_batch(self, theta, points, template, rng=None):
        mu, var = self._mu_var(theta)
        return gaussian_logpdf(points[..., 0], mu, var)


class PoissonModel(ModelClass):
    name = "poisson"
    data_dim = 1
    _space = ParamSpace.of(Coordinate("lam", "positive"))

    @property
    def param_space(self):
        return self._space

    def check_data(self, data):
        super().check_data(data)
        check_counts(data.points)

    def simulate_batch(self, theta, template, size, rng):
        return rng.poisson(float(theta[0]), (size, template.n, 1)).astype(float)

    def logliks_batch(self, theta, points, template, rng=None):
        return poisson_logpmf(points[..., 0], float(theta[0]))


class NegBinomialModel(ModelClass):
    """Failures before the ``r``-th success with success probability ``p``."""

    name = "negbin"
    data_dim = 1

    def __init__(self, r_max: float = NEGBIN_R_MAX):
        self.r_max = r_max
        self._space = ParamSpace.of(Coordinate("r", "positive", upper=r_max),
                                    Coordinate("p", "prob"))

    @property
    def param_space(self):
        return self._space

    def check_data(self, data):
        super().check_data(data)
        check_counts(data.points)

    def simulate_batch(self, theta, template, size, rng):
        r, p = float(theta[0]), float(theta[1])
        return rng.negative_binomial(r, p, (size, template.n, 1)).astype(float)

    def logliks_batch(self, theta, points, template, rng=None):
        return negbin_logpmf(points[..., 0], float(theta[0]), float(theta[1]))
