"""Polynomial regression with independent Gaussian noise."""

import numpy as np

from dcc.core import Coordinate, ModelClass, ParamSpace
from dcc.errors import LengthMismatch
from dcc.models.densities import gaussian_logpdf

DEFAULT_GRID = (-25.0, 25.0, 50)


def default_covariates(n: int = DEFAULT_GRID[2]) -> np.ndarray:
    return np.linspace(DEFAULT_GRID[0], DEFAULT_GRID[1], n)


def design_matrix(x, order: int) -> np.ndarray:
    return np.vander(np.asarray(x, dtype=float), order + 1, increasing=True)


class PolyRegressionModel(ModelClass):
    """``y_i = sum_j beta_j x_i^j + e_i`` with ``e_i ~ N(0, var)``.

    Covariates come from the constructor if given, else from the template's
    timestamps column, else an equally spaced grid on [-25, 25].
    theta is ``(beta_0, ..., beta_order, var)``.
    """

    data_dim = 1

    def __init__(self, order: int = 1, covariates=None):
        if order < 0:
            raise ValueError("polynomial order must be >= 0")
        self.order = order
        self.covariates = None if covariates is None else np.asarray(covariates, dtype=float)
        self.name = f"polyreg:k={order}"
        coords = [Coordinate(f"beta{j}") for j in range(order + 1)]
        self._space = ParamSpace.of(*coords, Coordinate("var", "positive"))

    @property
    def param_space(self):
        return self._space

    def covariates_for(self, template) -> np.ndarray:
        if self.covariates is not None:
            x = self.covariates
        elif template.timestamps is not None:
            x = template.timestamps
        else:
            x = default_covariates(template.n)
        if x.shape[0] != template.n:
            raise LengthMismatch(f"{x.shape[0]} covariates for {template.n} points")
        return x

    def mean(self, theta, template) -> np.ndarray:
        beta = np.asarray(theta[:-1], dtype=float)
        return design_matrix(self.covariates_for(template), self.order) @ beta

    def simulate_batch(self, theta, template, size, rng):
        mu = self.mean(theta, template)
        sd = np.sqrt(float(theta[-1]))
        return (mu + sd * rng.standard_normal((size, template.n)))[..., None]

    def logliks_batch(self, theta, points, template, rng=None):
        return gaussian_logpdf(points[..., 0], self.mean(theta, template), float(theta[-1]))

    def spec_string(self):
        return self.name
