"""Parameter-weight samplers.

Every sampler exposes ``draw(n, rng) -> (n, p) array`` and a ``diagnostics``
dict. The random-walk samplers move in the unconstrained coordinates of the
model's :class:`~dcc.core.ParamSpace`.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from dcc import streams
from dcc.core import Dataset, ModelClass
from dcc.errors import (
    AcceptanceOutOfRange,
    DccError,
    DegenerateStart,
    InvalidConfig,
    Underdispersed,
)
from dcc.inference.fitters import fit_mle

MAX_PROPOSAL_SD = 3.0
ACCEPTANCE_RANGE = (0.1, 0.6)


def metropolis_hastings(log_target: Callable, x0, propose: Callable, n_keep: int,
                        burn_in: int, thin: int, rng: np.random.Generator,
                        logp0: Optional[float] = None):
    """Metropolis-Hastings with a symmetric proposal.

    Keeps the state after step ``burn_in + k * thin`` for k = 1..n_keep. The
    target value of the current state is cached and never re-evaluated, which
    is what keeps the pseudo-marginal variant exact.

    Returns ``(kept_states, n_accepted, n_steps)``.
    """
    x = x0
    lp = log_target(x) if logp0 is None else logp0
    if not math.isfinite(lp):
        raise DegenerateStart("log target is not finite at the starting point")
    kept = []
    accepted = 0
    total = burn_in + n_keep * thin
    for step in range(1, total + 1):
        y = propose(x, rng)
        lq = log_target(y)
        if math.log(rng.random()) < lq - lp:
            x, lp = y, lq
            accepted += 1
        if step > burn_in and (step - burn_in) % thin == 0:
            kept.append(x)
    return kept, accepted, total


def finite_difference_hessian(f: Callable, x, step=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    p = x.size
    h = 1e-3 * np.maximum(1.0, np.abs(x)) if step is None else np.broadcast_to(step, (p,))
    H = np.empty((p, p))
    f0 = f(x)
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(p)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej)
                                 + f(x - ei - ej)) / (4 * h[i] * h[j])
    return H


def proposal_factor(hessian: np.ndarray, scale: float = 1.0,
                    max_sd: float = MAX_PROPOSAL_SD) -> np.ndarray:
    """Cholesky-like factor of ``scale * 2.38^2 / p * (-H)^-1``.

    Curvature below ``1 / max_sd^2`` along any eigen-direction (including
    non-concave directions) is raised to that floor.
    """
    p = hessian.shape[0]
    if not np.all(np.isfinite(hessian)):
        return scale * 2.38 / math.sqrt(p) * 0.1 * np.eye(p)
    vals, vecs = np.linalg.eigh(-0.5 * (hessian + hessian.T))
    vals = np.maximum(vals, 1.0 / max_sd ** 2)
    return scale * 2.38 / math.sqrt(p) * vecs * (1.0 / np.sqrt(vals))


def _gaussian_walk(factor):
    p = factor.shape[0]

    def propose(x, rng):
        return x + factor @ rng.standard_normal(p)

    return propose


def _check_acceptance(rate, label):
    lo, hi = ACCEPTANCE_RANGE
    if not lo <= rate <= hi:
        warnings.warn(f"{label} acceptance rate {rate:.3f} outside [{lo}, {hi}]",
                      AcceptanceOutOfRange, stacklevel=3)


class PointSampler:
    """All weight on one parameter vector."""

    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=float).reshape(-1)
        self.diagnostics = {"sampler": "point", "theta": self.theta.tolist()}

    def draw(self, n: int, rng=None) -> np.ndarray:
        return np.tile(self.theta, (n, 1))


def mle_start(model: ModelClass, data: Dataset) -> np.ndarray:
    try:
        return fit_mle(model, data)
    except Underdispersed as exc:
        if exc.boundary is None:
            raise DegenerateStart(str(exc)) from exc
        # just inside the truncated edge of the parameter space
        r_edge, _ = exc.boundary
        r = 0.5 * r_edge
        mean = float(np.mean(data.points))
        return np.array([r, r / (r + mean)])
    except DccError as exc:
        raise DegenerateStart(f"MLE fit failed: {exc}") from exc


def point_mle_sampler(model: ModelClass, data: Dataset) -> PointSampler:
    return PointSampler(mle_start(model, data))


class MetropolisHastingsSampler:
    """Random-walk MH targeting weights proportional to the likelihood.

    With ``jacobian=True`` (default) the initial weights are flat in the
    model's natural coordinates; with ``False`` they are flat in the
    unconstrained ones.
    """

    def __init__(self, model: ModelClass, data: Dataset, scale: float = 1.0,
                 burn_in: int = 1000, thin: int = 10, jacobian: bool = True,
                 start=None, factor=None):
        if not model.is_exact_likelihood():
            raise InvalidConfig("MH weights need an exact likelihood; use PMMH")
        if not scale > 0:
            raise InvalidConfig("proposal scale must be positive")
        model.check_data(data)
        self.model = model
        self.data = data
        self.space = model.param_space
        self.burn_in = burn_in
        self.thin = thin
        self.jacobian = jacobian
        theta0 = mle_start(model, data) if start is None else self.space.check(start)
        self.start = theta0
        self.phi0 = self.space.to_unconstrained(theta0)
        if factor is None:
            H = finite_difference_hessian(self.log_target, self.phi0)
            factor = proposal_factor(H, scale)
        self.factor = np.asarray(factor, dtype=float)
        self.diagnostics = {"sampler": "mh", "start": theta0.tolist()}

    def log_target(self, phi) -> float:
        theta = self.space.from_unconstrained(phi)
        if not self.space.contains(theta):
            return -math.inf
        try:
            ll = float(np.sum(self.model.logliks_batch(theta, self.data.points[None], self.data)))
        except DccError:
            return -math.inf
        if not math.isfinite(ll):
            return -math.inf
        return ll + (self.space.log_jacobian(phi) if self.jacobian else 0.0)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.space.dim == 0:
            return np.empty((n, 0))
        kept, acc, total = metropolis_hastings(
            self.log_target, self.phi0, _gaussian_walk(self.factor), n, self.burn_in,
            self.thin, rng)
        rate = acc / total
        self.diagnostics.update(acceptance_rate=rate, steps=total)
        _check_acceptance(rate, "MH")
        return np.array([self.space.from_unconstrained(phi) for phi in kept])


def mh_weight_sampler(model: ModelClass, data: Dataset, scale: float = 1.0,
                      burn_in: int = 1000, thin: int = 10, **kwargs):
    if model.param_space.dim == 0:
        return PointSampler(np.empty(0))
    return MetropolisHastingsSampler(model, data, scale=scale, burn_in=burn_in, thin=thin,
                                     **kwargs)


class PmmhSampler:
    """Particle marginal MH for models whose likelihood is a particle estimate.

    Initial weights are flat in the unconstrained (log) coordinates. The
    likelihood estimate of the current state is kept until a proposal is
    accepted; ``evaluations`` counts particle-filter runs.
    """

    def __init__(self, model: ModelClass, data: Dataset, particles: int = 2000,
                 scale: float = 1.0, burn_in: int = 1000, thin: int = 10, start=None,
                 factor=None, pilot_seed: int = 0):
        if particles < 500:
            raise InvalidConfig("PMMH needs at least 500 particles")
        model.check_data(data)
        self.model = model
        self.data = data
        self.space = model.param_space
        self.particles = int(particles)
        self.burn_in = burn_in
        self.thin = thin
        self.evaluations = 0
        self.pilot_seed = pilot_seed
        if start is None or factor is None:
            phi_hat, H = self._pilot()
        if start is None:
            self.phi0 = phi_hat
        else:
            self.phi0 = self.space.to_unconstrained(self.space.check(start))
        self.factor = proposal_factor(H, scale) if factor is None else np.asarray(factor)
        self.diagnostics = {"sampler": "pmmh", "particles": self.particles,
                            "start": self.space.from_unconstrained(self.phi0).tolist()}

    def _loglik(self, phi, rng) -> float:
        theta = self.space.from_unconstrained(phi)
        if not self.space.contains(theta):
            return -math.inf
        self.evaluations += 1
        try:
            z = self.model.logliks_batch(theta, self.data.points[None], self.data, rng,
                                         particles=self.particles)
        except DccError:
            return -math.inf
        return float(z.sum())

    def _pilot(self):
        """Common-random-number search for a start point and curvature."""

        def crn(phi):
            ll = self._loglik(phi, streams.stream(self.pilot_seed, 7))
            return ll if math.isfinite(ll) else -1e300

        best = None
        for ls in np.linspace(math.log(0.02), math.log(1.5), 7):
            for lt in np.linspace(math.log(0.002), math.log(2.0), 7):
                v = crn(np.array([ls, lt]))
                if best is None or v > best[0]:
                    best = (v, np.array([ls, lt]))
        res = minimize(lambda p: -crn(p), best[1], method="Nelder-Mead",
                       options={"xatol": 1e-3, "fatol": 1e-3, "maxiter": 400})
        phi_hat = res.x if -res.fun >= best[0] else best[1]
        H = finite_difference_hessian(crn, phi_hat, step=0.1)
        return phi_hat, H

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        kept, acc, total = metropolis_hastings(
            lambda phi: self._loglik(phi, rng), self.phi0, _gaussian_walk(self.factor), n,
            self.burn_in, self.thin, rng)
        rate = acc / total
        self.diagnostics.update(acceptance_rate=rate, steps=total)
        _check_acceptance(rate, "PMMH")
        return np.array([self.space.from_unconstrained(phi) for phi in kept])


def pmmh_weight_sampler(model: ModelClass, data: Dataset, particles: int = 2000,
                        scale: float = 1.0, burn_in: int = 1000, thin: int = 10, **kwargs):
    return PmmhSampler(model, data, particles=particles, scale=scale, burn_in=burn_in,
                       thin=thin, **kwargs)


def weights_for(model: ModelClass, data: Dataset, config) -> object:
    """The weight sampler selected by ``config.weight_mode``."""
    if config.weight_mode == "point-mle":
        if model.param_space.dim == 0:
            return PointSampler(np.empty(0))
        return point_mle_sampler(model, data)
    if config.weight_mode == "mh":
        return mh_weight_sampler(model, data, scale=config.mh_scale,
                                 burn_in=config.mh_burn_in, thin=config.mh_thin)
    return pmmh_weight_sampler(model, data, particles=config.particles,
                               scale=config.mh_scale, burn_in=config.mh_burn_in,
                               thin=config.mh_thin,
                               pilot_seed=streams.child_seed(config.seed, streams.WEIGHTS, 1))
