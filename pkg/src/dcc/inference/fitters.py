"""Maximum-likelihood point estimates for the built-in model classes."""

from functools import singledispatch

import numpy as np
from scipy.special import digamma, polygamma

from dcc.core import Dataset
from dcc.errors import (
    AllZeroCounts,
    DegenerateStart,
    InvalidConfig,
    NoConvergence,
    RankDeficientDesign,
    Underdispersed,
    ZeroVariance,
)
from dcc.models import (
    GaussianIidModel,
    KangarooSsmModel,
    LinearAr1Model,
    NegBinomialModel,
    PoissonModel,
    PolyRegressionModel,
)
from dcc.models.densities import check_counts
from dcc.models.iid import NEGBIN_R_MAX
from dcc.models.regression import design_matrix

_GOLDEN = (np.sqrt(5.0) - 1) / 2


def _scalar_series(data) -> np.ndarray:
    if isinstance(data, Dataset):
        if data.d != 1:
            raise InvalidConfig("expected one-dimensional data points")
        return data.column(0)
    return np.asarray(data, dtype=float).reshape(-1)


def mle_gaussian(data):
    y = _scalar_series(data)
    if y.size < 2:
        raise InvalidConfig("need at least two points")
    mu = y.mean()
    var = np.mean((y - mu) ** 2)
    if var <= 0:
        raise ZeroVariance("all points are equal")
    return float(mu), float(var)


def mle_poisson(data) -> float:
    y = check_counts(_scalar_series(data))
    lam = y.mean()
    if lam <= 0:
        raise AllZeroCounts("all counts are zero; the rate estimate is on the boundary")
    return float(lam)


def mle_negbin(data, r_max: float = NEGBIN_R_MAX, tol: float = 1e-8, max_iter: int = 100):
    """Return ``(r, p)`` maximising the likelihood.

    Newton iterations in ``log r`` on the profile likelihood with
    ``p = r / (r + mean)``, started at the method-of-moments value.
    """
    y = check_counts(_scalar_series(data))
    n = y.size
    mean = y.mean()
    var = np.mean((y - mean) ** 2)
    if mean <= 0:
        raise AllZeroCounts("all counts are zero")
    if var <= mean:
        r_b = r_max
        raise Underdispersed(
            f"sample variance {var:.4g} <= mean {mean:.4g}; the Poisson limit fits best",
            boundary=(r_b, r_b / (r_b + mean)))

    def grad_hess(r):
        g = digamma(y + r).sum() - n * digamma(r) + n * np.log(r / (r + mean))
        h = polygamma(1, y + r).sum() - n * polygamma(1, r) + n * (1 / r - 1 / (r + mean))
        return g, h

    u = np.log(mean * mean / (var - mean))
    for _ in range(max_iter):
        r = np.exp(u)
        g, h = grad_hess(r)
        d1 = r * g
        d2 = r * g + r * r * h
        step = -d1 / d2 if d2 < 0 else np.sign(d1) * 0.5
        step = float(np.clip(step, -1.0, 1.0))
        u += step
        if abs(step) < tol:
            break
    else:
        raise NoConvergence("negative binomial Newton iteration did not converge")
    r = float(np.exp(u))
    if r >= r_max:
        raise Underdispersed("size parameter diverges", boundary=(r_max, r_max / (r_max + mean)))
    return r, r / (r + mean)


def mle_polyreg(data, covariates, order: int):
    """Least squares via a QR factorisation; returns ``(beta, var)``."""
    y = _scalar_series(data)
    X = design_matrix(covariates, order)
    n, p = X.shape
    if n <= p:
        raise RankDeficientDesign(f"{n} points cannot identify {p} coefficients and a variance")
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-12 * diag.max():
        raise RankDeficientDesign("design matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    return beta, float(resid @ resid / n)


def _ar1_profile(y, a):
    n = y.size
    rss = (1 - a * a) * y[0] ** 2 + np.sum((y[1:] - a * y[:-1]) ** 2)
    var = rss / n
    return -0.5 * n * (np.log(2 * np.pi * var) + 1) + 0.5 * np.log(1 - a * a), var


def mle_ar1(data, bound: float = 0.999, tol: float = 1e-8):
    """Golden-section search on ``a`` with the variance profiled out."""
    y = _scalar_series(data)
    if y.size < 3:
        raise InvalidConfig("need at least three points")
    if np.all(y == y[0]) and y[0] == 0:
        raise ZeroVariance("all points are zero")
    lo, hi = -bound, bound
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc = _ar1_profile(y, c)[0]
    fd = _ar1_profile(y, d)[0]
    for _ in range(200):
        if hi - lo < tol:
            break
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = _ar1_profile(y, c)[0]
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = _ar1_profile(y, d)[0]
    else:
        raise NoConvergence("golden-section search did not converge")
    a = 0.5 * (lo + hi)
    return float(a), float(_ar1_profile(y, a)[1])


@singledispatch
def fit_mle(model, data: Dataset) -> np.ndarray:
    """MLE of ``theta`` for ``model``; the starting point of the MH back-end."""
    raise DegenerateStart(f"no maximum-likelihood fitter registered for {type(model).__name__}")


@fit_mle.register
def _(model: GaussianIidModel, data):
    if not model.free:
        return np.empty(0)
    return np.array(mle_gaussian(data))


@fit_mle.register
def _(model: PoissonModel, data):
    return np.array([mle_poisson(data)])


@fit_mle.register
def _(model: NegBinomialModel, data):
    return np.array(mle_negbin(data, r_max=model.r_max))


@fit_mle.register
def _(model: PolyRegressionModel, data):
    beta, var = mle_polyreg(data, model.covariates_for(data), model.order)
    return np.append(beta, var)


@fit_mle.register
def _(model: LinearAr1Model, data):
    return np.array(mle_ar1(data))


@fit_mle.register
def _(model: KangarooSsmModel, data):
    raise DegenerateStart("the state-space model has no closed-form fitter; use PMMH")
