"""Monte Carlo estimation of the data consistency criterion.

For each parameter draw, ``m_cal`` simulated datasets give per-index means
and variances of the incremental log-likelihoods. The observed data and
``m_test`` fresh simulated datasets are then scored with the standardised
squared-deviation statistic. ``pfa_u`` is the fraction of simulated
statistics strictly above the observed one. Averaging over draws gives
``pfa_u*``, and the criterion is ``min(pfa_u*, 1 - pfa_u*)``.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from dcc import streams
from dcc.core import Dataset, DccConfig, DccResult, ModelClass
from dcc.errors import (
    DegenerateVariance,
    DccError,
    InvalidConfig,
    LengthMismatch,
    WeightSamplerFailure,
)

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class MomentEstimates:
    means: np.ndarray
    variances: np.ndarray
    m_cal: int

    @property
    def n(self) -> int:
        return self.means.shape[0]


def moments_from_samples(z: np.ndarray, pool_iid: bool = False) -> MomentEstimates:
    """Per-index sample mean and unbiased variance of ``z`` with shape (m, n)."""
    m, n = z.shape
    if pool_iid:
        means = np.full(n, z.mean())
        variances = np.full(n, z.var(ddof=1))
    else:
        means = z.mean(axis=0)
        variances = z.var(axis=0, ddof=1)
    bad = np.flatnonzero(~(variances >= VARIANCE_FLOOR))
    if bad.size:
        raise DegenerateVariance(
            f"log-likelihood variance below {VARIANCE_FLOOR} at indices {bad[:5].tolist()}")
    return MomentEstimates(means, variances, m)


def estimate_moments(model: ModelClass, theta, template: Dataset, m_cal: int,
                     rng: np.random.Generator, pool_iid: bool = False) -> MomentEstimates:
    if m_cal < 2:
        raise InvalidConfig("need at least two calibration datasets")
    sims = model.simulate_batch(theta, template, m_cal, rng)
    z = model.logliks_batch(theta, sims, template, rng)
    return moments_from_samples(z, pool_iid)


def statistic_T(z, moments: MomentEstimates):
    """Mean standardised squared deviation; ``z`` may be (n,) or (m, n)."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != moments.n:
        raise LengthMismatch(f"{z.shape[-1]} log-likelihoods for {moments.n} moments")
    if np.any(~(moments.variances >= VARIANCE_FLOOR)):
        raise DegenerateVariance("moment variances below the degeneracy floor")
    return np.mean((z - moments.means) ** 2 / moments.variances, axis=-1)


def exceedance_count(T_sim, T_obs: float) -> int:
    """Number of simulated statistics strictly greater than the observed one."""
    return int(np.count_nonzero(np.asarray(T_sim) > T_obs))


def criterion(pfa_u_star: float) -> float:
    return min(pfa_u_star, 1.0 - pfa_u_star)


def criterion_from_counts(counts, m_test: int, complement: bool = False) -> tuple:
    """``(pfa_u*, pfa*)`` from per-draw exceedance counts.

    With ``complement=True`` the counts are read as counts of the complementary
    event (simulated statistic not above the observed one) and mapped back.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if complement:
        counts = m_test - counts
    pfa_u = counts / m_test
    star = float(np.mean(pfa_u))
    return star, criterion(star)


def _draw_detail(model, theta, observed, m_test, m_cal, rng, pool_iid=False):
    cal_rng, test_rng, obs_rng = rng.spawn(3)
    moments = estimate_moments(model, theta, observed, m_cal, cal_rng, pool_iid)
    sims = model.simulate_batch(theta, observed, m_test, test_rng)
    T_sim = statistic_T(model.logliks_batch(theta, sims, observed, test_rng), moments)
    z_obs = model.logliks_batch(theta, observed.points[None], observed, obs_rng)[0]
    T_obs = float(statistic_T(z_obs, moments))
    return exceedance_count(T_sim, T_obs), T_obs, T_sim


def pfa_u_for_theta(model: ModelClass, theta, observed: Dataset, m_test: int, m_cal: int,
                    rng: np.random.Generator, pool_iid: bool = False) -> float:
    """Estimated probability that a simulated statistic exceeds the observed one."""
    theta = model.param_space.check(theta)
    model.check_data(observed)
    count, _, _ = _draw_detail(model, theta, observed, m_test, m_cal, rng, pool_iid)
    return count / m_test


def dcc(model: ModelClass, weights, observed: Dataset, config: DccConfig,
        workers: Optional[int] = None) -> DccResult:
    """Run the full criterion for ``model`` on ``observed``.

    ``weights`` is any object with ``draw(n, rng) -> (n, p) array``. Draw ``j``
    uses the stream ``(seed, DRAW, j)``, so the result is identical for any
    ``workers`` count.
    """
    start = time.perf_counter()
    model.check_data(observed)
    space = model.param_space
    try:
        thetas = np.asarray(weights.draw(config.n_draws, streams.stream(config.seed, streams.WEIGHTS)),
                            dtype=float).reshape(config.n_draws, space.dim)
    except DccError:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        raise WeightSamplerFailure(f"weight sampler failed: {exc}") from exc
    for th in thetas:
        space.check(th)

    def one(j):
        rng = streams.stream(config.seed, streams.DRAW, j)
        count, T_obs, _ = _draw_detail(model, thetas[j], observed, config.m_test,
                                       config.m_cal, rng, config.pool_iid_moments)
        return count, T_obs

    n_workers = config.workers if workers is None else workers
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            out = list(pool.map(one, range(config.n_draws)))
    else:
        out = [one(j) for j in range(config.n_draws)]

    counts = np.array([c for c, _ in out], dtype=np.int64)
    T_obs = np.array([t for _, t in out])
    star, final = criterion_from_counts(counts, config.m_test)
    diag = dict(getattr(weights, "diagnostics", {}) or {})
    return DccResult(
        pfa_u_per_draw=counts / config.m_test,
        exceed_counts=counts,
        T_obs_per_draw=T_obs,
        thetas=thetas,
        pfa_u_star_hat=star,
        pfa_star_hat=final,
        config=config,
        elapsed=time.perf_counter() - start,
        diagnostics=diag,
    )


def threshold_exact(rho: float) -> float:
    """Rejection threshold for a class with no free parameters."""
    if not 0 <= rho <= 1:
        raise InvalidConfig("rho must lie in [0, 1]")
    return rho / 2


def calibrated_criterion_values(model: ModelClass, generator_theta, weights_factory: Callable,
                                n: int, reps: int, config: DccConfig,
                                template: Optional[Dataset] = None) -> np.ndarray:
    """``pfa*`` for ``reps`` datasets simulated at ``generator_theta``.

    ``weights_factory(model, data, config)`` returns the weight sampler for one
    simulated dataset.
    """
    if template is None:
        template = Dataset(np.zeros((n, model.data_dim)))
    elif template.n != n:
        raise LengthMismatch("template size differs from n")
    theta = model.param_space.check(generator_theta)
    values = np.empty(reps)
    for rep in range(reps):
        rng = streams.stream(config.seed, streams.CALIBRATION_REP, rep)
        data = model.simulate(theta, template, rng)
        cfg = config.replace(seed=streams.child_seed(config.seed, streams.CALIBRATION_REP, rep))
        values[rep] = dcc(model, weights_factory(model, data, cfg), data, cfg).pfa_star_hat
    return values


def calibrate_threshold(model: ModelClass, generator_theta, weights_factory: Callable,
                        n: int, rho: float, reps: int, config: DccConfig,
                        template: Optional[Dataset] = None) -> float:
    """Empirical ``rho``-quantile of ``pfa*`` under data from inside the class.

    Reject a dataset when its ``pfa*`` falls strictly below the returned value.
    """
    if reps < 100:
        raise InvalidConfig("threshold calibration needs at least 100 replications")
    if not 0 <= rho <= 1:
        raise InvalidConfig("rho must lie in [0, 1]")
    values = calibrated_criterion_values(model, generator_theta, weights_factory, n, reps,
                                         config, template)
    return float(np.quantile(values, rho))
