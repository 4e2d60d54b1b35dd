"""Kangaroo population state-space model.

Latent abundance follows geometric Brownian motion observed through two
independent negative binomial transect counts per survey::

    log x_1 ~ N(0, 5)    (variance; ``init_log_var`` overrides it)
    dx_t / x_t = sigma^2 / 2 dt + sigma dW_t
    y_{1,t}, y_{2,t} | x_t ~ NB(mean x_t, variance x_t + tau x_t^2)

By Ito's lemma ``d log x_t = sigma dW_t`` exactly, so over a gap ``dt`` the
log-abundance moves by ``sigma * sqrt(dt) * N(0, 1)``. In the (r, p)
parameterisation the count law has ``r = 1 / tau`` and ``p = 1 / (1 + tau x)``.

Incremental log-likelihoods are estimated by a bootstrap particle filter with
multinomial resampling at every step.
"""

import math

import numba
import numpy as np

from dcc.core import Coordinate, ModelClass, ParamSpace
from dcc.errors import NonIncreasingTimestamps, ParticleCollapse
from dcc.models.densities import check_counts

INIT_LOG_VAR = 5.0
DEFAULT_PARTICLES = 2000


@numba.njit(cache=True)
def _softplus(u):
    # log(1 + e^u); the plain form is exact enough in absolute terms, which is
    # all a log-weight needs, and cheaper than log1p
    if u > 35.0:
        return u
    return math.log(1.0 + math.exp(u))


@numba.njit(cache=True)
def _pf_batch(counts, dt, sigma, tau, init_sd, n_particles, rng, out):
    """Run one filter per dataset in ``counts`` (m, n, 2); write z into ``out``.

    Returns 0 on success, else 1 + the flat index of the step that collapsed.
    """
    m, n = counts.shape[0], counts.shape[1]
    K = n_particles
    r = 1.0 / tau
    log_tau = math.log(tau)
    log_k = math.log(K)
    lg_r = math.lgamma(r)
    lx = np.empty(K)
    nxt = np.empty(K)
    w = np.empty(K)
    cw = np.empty(K)
    ex = np.empty(K + 1)
    for b in range(m):
        for k in range(K):
            lx[k] = init_sd * rng.standard_normal()
        for i in range(n):
            if i > 0:
                step = sigma * math.sqrt(dt[i])
                for k in range(K):
                    lx[k] += step * rng.standard_normal()
            y1 = counts[b, i, 0]
            y2 = counts[b, i, 1]
            s = y1 + y2
            const = (math.lgamma(y1 + r) + math.lgamma(y2 + r) - 2.0 * lg_r
                     - math.lgamma(y1 + 1.0) - math.lgamma(y2 + 1.0))
            # with p = 1 / (1 + tau x) and u = log(tau x): log p = -softplus(u)
            # and log(1 - p) = u - softplus(u)
            a = 2.0 * r + s
            mx = -np.inf
            for k in range(K):
                u = log_tau + lx[k]
                v = s * u - a * _softplus(u)
                w[k] = v
                if v > mx:
                    mx = v
            if not mx > -np.inf or not math.isfinite(mx):
                return b * n + i + 1
            tot = 0.0
            for k in range(K):
                tot += math.exp(w[k] - mx)
                cw[k] = tot
            out[b, i] = const + mx + math.log(tot) - log_k
            if i < n - 1:
                # sorted uniforms from normalised exponential spacings
                es = 0.0
                for k in range(K + 1):
                    es += rng.standard_exponential()
                    ex[k] = es
                j = 0
                scale = tot / es
                for k in range(K):
                    u = ex[k] * scale
                    while j < K - 1 and cw[j] < u:
                        j += 1
                    nxt[k] = lx[j]
                for k in range(K):
                    lx[k] = nxt[k]
    return 0


def time_gaps(timestamps) -> np.ndarray:
    t = np.asarray(timestamps, dtype=float)
    return np.concatenate([[0.0], np.diff(t)])


class KangarooSsmModel(ModelClass):
    """theta = (sigma, tau); bivariate integer data with survey times in years."""

    data_dim = 2

    def __init__(self, particles: int = DEFAULT_PARTICLES, sigma_max: float = 2.0,
                 tau_max: float = 10.0, init_log_var: float = INIT_LOG_VAR):
        if particles < 1:
            raise ValueError("particle count must be positive")
        if not init_log_var > 0:
            raise ValueError("initial log-variance must be positive")
        self.particles = int(particles)
        self.init_log_var = float(init_log_var)
        self.name = f"kangaroo-ssm:K={self.particles}"
        if self.init_log_var != INIT_LOG_VAR:
            self.name += f",v0={self.init_log_var:g}"
        self._space = ParamSpace.of(Coordinate("sigma", "positive", upper=sigma_max),
                                    Coordinate("tau", "positive", upper=tau_max))

    @property
    def param_space(self):
        return self._space

    def is_exact_likelihood(self):
        return False

    def check_data(self, data):
        super().check_data(data)
        check_counts(data.points)
        if data.timestamps is None:
            raise NonIncreasingTimestamps("the kangaroo model needs survey times")

    def simulate_latent(self, theta, template, size, rng) -> np.ndarray:
        """Log-abundance paths, shape ``(size, n)``."""
        sigma = float(theta[0])
        dt = time_gaps(template.timestamps)
        steps = rng.standard_normal((size, template.n))
        steps[:, 0] *= math.sqrt(self.init_log_var)
        steps[:, 1:] *= sigma * np.sqrt(dt[1:])
        return np.cumsum(steps, axis=1)

    def simulate_batch(self, theta, template, size, rng):
        tau = float(theta[1])
        lx = self.simulate_latent(theta, template, size, rng)
        p = 1.0 / (1.0 + tau * np.exp(lx))
        counts = rng.negative_binomial(1.0 / tau, p[..., None], (size, template.n, 2))
        return counts.astype(float)

    def logliks_batch(self, theta, points, template, rng=None, particles=None):
        if rng is None:
            raise ValueError("the particle filter needs a random generator")
        K = self.particles if particles is None else int(particles)
        pts = np.ascontiguousarray(points, dtype=float)
        out = np.empty(pts.shape[:2])
        status = _pf_batch(pts, time_gaps(template.timestamps), float(theta[0]),
                           float(theta[1]), math.sqrt(self.init_log_var), K, rng, out)
        if status:
            b, i = divmod(status - 1, pts.shape[1])
            raise ParticleCollapse(
                f"all particle weights vanished (dataset {b}, step {i}, theta={list(theta)})")
        return out

    def spec_string(self):
        return self.name
