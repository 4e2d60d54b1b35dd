"""Vectorised log-density kernels shared by the model classes."""

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from dcc.errors import (
    NegativeCount,
    NonIntegerCount,
    NonPositiveVariance,
    UnderdispersedParameters,
)

_LOG_2PI = np.log(2 * np.pi)


def gaussian_logpdf(y, mu, var):
    var = np.asarray(var, dtype=float)
    if np.any(~(var > 0)):
        raise NonPositiveVariance("variance must be positive")
    y = np.asarray(y, dtype=float)
    return -0.5 * (_LOG_2PI + np.log(var)) - (y - mu) ** 2 / (2 * var)


def check_counts(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise NegativeCount("counts must be nonnegative")
    if np.any(y != np.floor(y)):
        raise NonIntegerCount("counts must be integer-valued")
    return y


def poisson_logpmf(y, lam):
    y = check_counts(y)
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)):
        raise NonPositiveVariance("Poisson rate must be positive")
    return xlogy(y, lam) - lam - gammaln(y + 1)


def negbin_logpmf(y, r, p):
    """log P(Y = y) for the number of failures before the ``r``-th success."""
    y = check_counts(y)
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(~(r > 0)) or np.any(~((p > 0) & (p < 1))):
        raise NonPositiveVariance("need r > 0 and 0 < p < 1")
    return gammaln(y + r) - gammaln(r) - gammaln(y + 1) + r * np.log(p) + xlog1py(y, -p)


def negbin_from_mean_var(mean, var):
    """Convert a (mean, variance) pair to ``(r, p)``; requires var > mean > 0."""
    mean = float(mean)
    var = float(var)
    if not (mean > 0 and var > mean):
        raise UnderdispersedParameters(f"need var > mean > 0, got mean={mean}, var={var}")
    return mean * mean / (var - mean), mean / var
