"""Classical goodness-of-fit tests used as reference points.

The normality tests are calibrated by simulation: the rejection threshold at
level ``rho`` is the ``1 - rho`` quantile of the statistic over N(0, 1)
samples of the same size. Thresholds are cached per
``(test, n, level, reps, seed)`` and can be persisted to CSV.
"""

from __future__ import annotations

import csv
import math
import os
import threading
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import gammaincc, log_ndtr, ndtr

from dcc import streams
from dcc.core import Dataset
from dcc.errors import InvalidConfig, NonPositiveDof, ZeroVariance

DEFAULT_CALIBRATION_REPS = 400_000


def std_normal_cdf(x):
    return ndtr(x)


def chi2_sf(x, k):
    """Upper tail of the chi-square distribution with ``k`` degrees of freedom."""
    if np.any(np.asarray(k) < 1):
        raise InvalidConfig("chi-square degrees of freedom must be >= 1")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise InvalidConfig("chi-square argument must be nonnegative")
    return gammaincc(np.asarray(k) / 2.0, x / 2.0)


# --------------------------------------------------------------------------
# statistics, vectorised over leading axes
# --------------------------------------------------------------------------
def _standardise(y):
    mu = y.mean(axis=-1, keepdims=True)
    sd = y.std(axis=-1, ddof=1, keepdims=True)
    if np.any(sd <= 0):
        raise ZeroVariance("sample has zero variance")
    return (y - mu) / sd


def _ks_distance(z_sorted):
    n = z_sorted.shape[-1]
    F = ndtr(z_sorted)
    i = np.arange(1, n + 1)
    return np.maximum((i / n - F).max(axis=-1), (F - (i - 1) / n).max(axis=-1))


def ks_statistic(y):
    """sup |F_n - Phi| against the fixed standard normal."""
    return _ks_distance(np.sort(np.asarray(y, dtype=float), axis=-1))


def lilliefors_statistic(y):
    return _ks_distance(np.sort(_standardise(np.asarray(y, dtype=float)), axis=-1))


def anderson_darling_statistic(y):
    z = np.sort(_standardise(np.asarray(y, dtype=float)), axis=-1)
    n = z.shape[-1]
    i = np.arange(1, n + 1)
    # ln(1 - u_{n+1-i}) = ln Phi(-z_{n+1-i})
    s = (2 * i - 1) * (log_ndtr(z) + log_ndtr(-z[..., ::-1]))
    return -n - s.sum(axis=-1) / n


def jarque_bera_statistic(y):
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    d = y - y.mean(axis=-1, keepdims=True)
    m2 = np.mean(d ** 2, axis=-1)
    if np.any(m2 <= 0):
        raise ZeroVariance("sample has zero variance")
    skew = np.mean(d ** 3, axis=-1) / m2 ** 1.5
    kurt = np.mean(d ** 4, axis=-1) / m2 ** 2
    return n / 6.0 * (skew ** 2 + (kurt - 3.0) ** 2 / 4.0)


STATISTICS = {
    "ks": ks_statistic,
    "lilliefors": lilliefors_statistic,
    "ad": anderson_darling_statistic,
    "jb": jarque_bera_statistic,
}
MIN_N = {"ks": 5, "lilliefors": 8, "ad": 8, "jb": 8}
TEST_NAMES = {
    "ks": "Kolmogorov-Smirnov",
    "lilliefors": "Lilliefors",
    "ad": "Anderson-Darling",
    "jb": "Jarque-Bera",
    "ljungbox": "Ljung-Box",
}


@dataclass
class TestReport:
    test: str
    statistic: float
    level: float
    reject: bool
    threshold: Optional[float] = None
    p_value: Optional[float] = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# threshold calibration
# --------------------------------------------------------------------------
class ThresholdCache:
    """Calibrated thresholds keyed by ``(test, n, level, reps, seed)``.

    When ``path`` is given, entries are loaded from and appended to a CSV file
    with columns ``test,n,level,reps,seed,threshold``.
    """

    FIELDS = ("test", "n", "level", "reps", "seed", "threshold")

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self._lock = threading.Lock()
        self._entries: dict = {}
        if path and os.path.exists(path):
            with open(path, newline="", encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    key = (row["test"], int(row["n"]), float(row["level"]),
                           int(row["reps"]), int(row["seed"]))
                    self._entries[key] = float(row["threshold"])

    def get(self, key):
        return self._entries.get(key)

    def put(self, key, value: float) -> None:
        with self._lock:
            self._entries[key] = value
            if self.path:
                new = not os.path.exists(self.path)
                with open(self.path, "a", newline="", encoding="utf-8") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    if new:
                        w.writerow(self.FIELDS)
                    w.writerow([*key[:2], repr(key[2]), *key[3:], repr(value)])


_default_cache = ThresholdCache()


@lru_cache(maxsize=32)
def null_statistics(test: str, n: int, reps: int, seed: int = 0, chunk: int = 10_000):
    """The statistic over ``reps`` N(0, 1) samples of size ``n`` (read-only array)."""
    stat = STATISTICS[test]
    out = np.empty(reps)
    for c, start in enumerate(range(0, reps, chunk)):
        stop = min(reps, start + chunk)
        rng = streams.stream(seed, streams.BASELINE, n, c)
        out[start:stop] = stat(rng.standard_normal((stop - start, n)))
    out.setflags(write=False)
    return out


def calibrated_threshold(test: str, n: int, level: float,
                         reps: int = DEFAULT_CALIBRATION_REPS, seed: int = 0,
                         cache: Optional[ThresholdCache] = None) -> float:
    """Upper ``level`` quantile of the null distribution of ``test`` at size ``n``."""
    if test not in STATISTICS:
        raise InvalidConfig(f"unknown test {test!r}")
    if not 0 < level < 1:
        raise InvalidConfig("level must lie in (0, 1)")
    cache = _default_cache if cache is None else cache
    key = (test, int(n), float(level), int(reps), int(seed))
    value = cache.get(key)
    if value is None:
        value = float(np.quantile(null_statistics(test, int(n), int(reps), int(seed)), 1 - level))
        cache.put(key, value)
    return value


def _normality_test(test, data, level, reps, seed, cache):
    y = data.column(0) if isinstance(data, Dataset) else np.asarray(data, dtype=float).reshape(-1)
    if isinstance(data, Dataset) and data.d != 1:
        raise InvalidConfig("normality tests need one-dimensional points")
    if y.size < MIN_N[test]:
        raise InvalidConfig(f"{TEST_NAMES[test]} needs at least {MIN_N[test]} points")
    stat = float(STATISTICS[test](y))
    thr = calibrated_threshold(test, y.size, level, reps, seed, cache)
    return TestReport(TEST_NAMES[test], stat, level, stat > thr, threshold=thr,
                      provenance={"calibration": "simulated", "reps": reps, "seed": seed})


def ks_fixed(data, level=0.05, reps=DEFAULT_CALIBRATION_REPS, seed=0, cache=None):
    return _normality_test("ks", data, level, reps, seed, cache)


def lilliefors(data, level=0.05, reps=DEFAULT_CALIBRATION_REPS, seed=0, cache=None):
    return _normality_test("lilliefors", data, level, reps, seed, cache)


def anderson_darling(data, level=0.05, reps=DEFAULT_CALIBRATION_REPS, seed=0, cache=None):
    return _normality_test("ad", data, level, reps, seed, cache)


def jarque_bera(data, level=0.05, reps=DEFAULT_CALIBRATION_REPS, seed=0, cache=None):
    return _normality_test("jb", data, level, reps, seed, cache)


# --------------------------------------------------------------------------
# Ljung-Box
# --------------------------------------------------------------------------
def default_lag(n: int) -> int:
    return int(math.floor(math.log(n) + 0.5))


def autocorrelations(e, h: int) -> np.ndarray:
    """Lag 1..h sample autocorrelations with the 1/n normalisation."""
    e = np.asarray(e, dtype=float)
    d = e - e.mean(axis=-1, keepdims=True)
    denom = np.sum(d * d, axis=-1)
    return np.stack([np.sum(d[..., k:] * d[..., :-k], axis=-1) / denom
                     for k in range(1, h + 1)], axis=-1)


def ljung_box_statistic(e, h: int):
    e = np.asarray(e, dtype=float)
    n = e.shape[-1]
    r = autocorrelations(e, h)
    k = np.arange(1, h + 1)
    return n * (n + 2) * np.sum(r ** 2 / (n - k), axis=-1)


def ljung_box(residuals, h: Optional[int] = None, d_param: int = 2,
              level: float = 0.05) -> TestReport:
    """Whiteness test; the p-value uses ``h - d_param`` degrees of freedom."""
    e = np.asarray(residuals, dtype=float).reshape(-1)
    n = e.size
    h = default_lag(n) if h is None else int(h)
    if h < 1:
        raise InvalidConfig("lag count must be >= 1")
    if n <= h:
        raise InvalidConfig(f"need more than {h} residuals")
    dof = h - d_param
    if dof < 1:
        raise NonPositiveDof(f"h - d_param = {h} - {d_param} leaves no degrees of freedom")
    q = float(ljung_box_statistic(e, h))
    p = float(chi2_sf(q, dof))
    return TestReport("Ljung-Box", q, level, p < level, p_value=p,
                      provenance={"calibration": "analytic", "h": h, "dof": dof})
