"""Domain types shared across the package.

Parameter vectors are plain 1-D float arrays; :class:`ParamSpace` owns the
per-coordinate constraints and the bijections to an unconstrained space used by
the MCMC back-ends.
"""

from __future__ import annotations

import abc
import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from dcc.errors import (
    EmptyData,
    InvalidConfig,
    NonFiniteValue,
    NonIncreasingTimestamps,
    OutOfParameterSpace,
    RaggedDimensions,
)

WEIGHT_MODES = ("point-mle", "mh", "pmmh")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered data points of a common dimension, optionally time-stamped."""

    points: np.ndarray
    timestamps: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points.setflags(write=False)
        if self.timestamps is not None:
            self.timestamps.setflags(write=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def column(self, k: int = 0) -> np.ndarray:
        return self.points[:, k]

    def replace_points(self, points: np.ndarray) -> "Dataset":
        """New dataset sharing this one's timestamps."""
        return validate_dataset(points, self.timestamps)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.timestamps is None or other.timestamps is None:
            same_t = self.timestamps is None and other.timestamps is None
        else:
            same_t = np.array_equal(self.timestamps, other.timestamps)
        return same_t and np.array_equal(self.points, other.points)

    def __repr__(self):
        t = "yes" if self.timestamps is not None else "no"
        return f"Dataset(n={self.n}, d={self.d}, timestamps={t})"


def validate_dataset(points, timestamps=None) -> Dataset:
    """Build a :class:`Dataset` from raw nested sequences or arrays.

    1-D input is read as ``n`` scalar points.
    """
    if points is None or len(points) == 0:
        raise EmptyData("dataset has no points")
    if isinstance(points, np.ndarray):
        arr = np.array(points, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
    else:
        rows = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
        dims = {r.shape for r in rows}
        if len(dims) != 1:
            raise RaggedDimensions(f"points have differing shapes {sorted(dims)}")
        arr = np.stack(rows)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise RaggedDimensions(f"expected an (n, d) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("dataset contains NaN or infinite values")

    ts = None
    if timestamps is not None:
        ts = np.array(timestamps, dtype=float).reshape(-1)
        if ts.shape[0] != arr.shape[0]:
            raise NonIncreasingTimestamps(
                f"{ts.shape[0]} timestamps for {arr.shape[0]} points")
        if not np.all(np.isfinite(ts)):
            raise NonFiniteValue("timestamps contain NaN or infinite values")
        if np.any(np.diff(ts) <= 0):
            raise NonIncreasingTimestamps("timestamps must strictly increase")
    return Dataset(arr, ts)


def write_csv(data: Dataset, path_or_buf) -> None:
    """Write ``data`` as CSV with header ``[t,]y1..yd`` (shortest round-trip floats)."""
    header = ([] if data.timestamps is None else ["t"]) + [f"y{k + 1}" for k in range(data.d)]
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(data.n):
            row = [] if data.timestamps is None else [repr(float(data.timestamps[i]))]
            row += [repr(float(v)) for v in data.points[i]]
            w.writerow(row)
    finally:
        if own:
            fh.close()


def read_csv(path_or_buf) -> Dataset:
    if isinstance(path_or_buf, str) and "\n" in path_or_buf:
        path_or_buf = io.StringIO(path_or_buf)
    own = not hasattr(path_or_buf, "read")
    fh = open(path_or_buf, newline="", encoding="utf-8") if own else path_or_buf
    try:
        rows = [r for r in csv.reader(fh) if r]
    finally:
        if own:
            fh.close()
    if not rows:
        raise EmptyData("CSV file is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise EmptyData("CSV file has a header but no data rows")
    has_t = header[0] == "t"
    try:
        values = [[float(v) for v in r] for r in body]
    except ValueError as exc:
        raise NonFiniteValue(f"unparseable CSV value: {exc}") from None
    if any(len(r) != len(header) for r in values):
        raise RaggedDimensions("CSV rows have differing column counts")
    if has_t:
        return validate_dataset([r[1:] for r in values], [r[0] for r in values])
    return validate_dataset(values)


# --------------------------------------------------------------------------
# Parameter spaces
# --------------------------------------------------------------------------
_KINDS = ("real", "positive", "unit", "prob")


@dataclass(frozen=True)
class Coordinate:
    """One parameter coordinate.

    ``kind`` selects the open support and the unconstrained transform:
    ``real`` (identity), ``positive`` (log), ``unit`` for (-1, 1) (atanh) and
    ``prob`` for (0, 1) (logit). ``upper`` optionally truncates from above.
    """

    name: str
    kind: str = "real"
    upper: float = math.inf

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown coordinate kind {self.kind!r}")


@dataclass(frozen=True)
class ParamSpace:
    coords: tuple = ()

    @classmethod
    def of(cls, *coords: Coordinate) -> "ParamSpace":
        return cls(tuple(coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def names(self) -> list:
        return [c.name for c in self.coords]

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,) or not np.all(np.isfinite(theta)):
            return False
        for c, v in zip(self.coords, theta):
            if c.kind == "positive" and not v > 0:
                return False
            if c.kind == "unit" and not -1 < v < 1:
                return False
            if c.kind == "prob" and not 0 < v < 1:
                return False
            if not v < c.upper:
                return False
        return True

    def check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if not self.contains(theta):
            raise OutOfParameterSpace(
                f"theta={theta.tolist()} outside space {self.names}")
        return theta

    def to_unconstrained(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.empty(self.dim)
        for k, c in enumerate(self.coords):
            v = theta[k]
            if c.kind == "real":
                out[k] = v
            elif c.kind == "positive":
                out[k] = math.log(v)
            elif c.kind == "unit":
                out[k] = math.atanh(v)
            else:
                out[k] = math.log(v) - math.log1p(-v)
        return out

    def from_unconstrained(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        out = np.empty(self.dim)
        for k, c in enumerate(self.coords):
            u = phi[k]
            if c.kind == "real":
                out[k] = u
            elif c.kind == "positive":
                out[k] = math.exp(min(u, 700.0))
            elif c.kind == "unit":
                out[k] = math.tanh(u)
            else:
                out[k] = 1.0 / (1.0 + math.exp(-u)) if u >= 0 else math.exp(u) / (1.0 + math.exp(u))
        return out

    def log_jacobian(self, phi) -> float:
        """log |d theta / d phi| at unconstrained point ``phi``."""
        total = 0.0
        for c, u in zip(self.coords, np.asarray(phi, dtype=float)):
            if c.kind == "positive":
                total += u
            elif c.kind == "unit":
                # d tanh = 1 - tanh^2 = 4 e^{-2|u|} / (1 + e^{-2|u|})^2
                a = abs(u)
                total += math.log(4.0) - 2 * a - 2 * math.log1p(math.exp(-2 * a))
            elif c.kind == "prob":
                a = abs(u)
                total += -a - 2 * math.log1p(math.exp(-a))
        return total


# --------------------------------------------------------------------------
# Model classes
# --------------------------------------------------------------------------
class ModelClass(abc.ABC):
    """A parameterised family ``p(y | theta)``.

    Subclasses implement the batched hooks :meth:`simulate_batch` and
    :meth:`logliks_batch`; the single-dataset methods are thin wrappers. Batched
    arrays have shape ``(m, n, d)`` for data and ``(m, n)`` for incremental
    log-likelihoods. Implementations hold no mutable state, so one instance can
    be used from several threads as long as each call gets its own generator.
    """

    name: str = "model"
    data_dim: int = 1

    @property
    @abc.abstractmethod
    def param_space(self) -> ParamSpace:
        ...

    def is_exact_likelihood(self) -> bool:
        return True

    def check_data(self, data: Dataset) -> None:
        """Raise if ``data`` cannot be evaluated under this class."""
        if data.d != self.data_dim:
            raise RaggedDimensions(
                f"{self.name} expects {self.data_dim}-dimensional points, got {data.d}")

    @abc.abstractmethod
    def simulate_batch(self, theta, template: Dataset, size: int,
                       rng: np.random.Generator) -> np.ndarray:
        ...

    @abc.abstractmethod
    def logliks_batch(self, theta, points: np.ndarray, template: Dataset,
                      rng: Optional[np.random.Generator] = None) -> np.ndarray:
        ...

    def simulate(self, theta, template: Dataset, rng: np.random.Generator) -> Dataset:
        theta = self.param_space.check(theta)
        pts = self.simulate_batch(theta, template, 1, rng)[0]
        return Dataset(pts, template.timestamps)

    def incremental_logliks(self, theta, data: Dataset,
                            rng: Optional[np.random.Generator] = None) -> np.ndarray:
        theta = self.param_space.check(theta)
        self.check_data(data)
        return self.logliks_batch(theta, data.points[None], data, rng)[0]

    def spec_string(self) -> str:
        return self.name


# --------------------------------------------------------------------------
# Configuration and results
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class DccConfig:
    """Monte Carlo sizes and weight back-end settings for one criterion run.

    ``n_draws`` is the number of parameter draws, ``m_test`` the number of
    simulated datasets compared against the observed statistic and ``m_cal``
    the number used to estimate the per-index moments.
    """

    n_draws: int = 200
    m_test: int = 200
    m_cal: int = 200
    seed: int = 0
    weight_mode: str = "point-mle"
    mh_burn_in: int = 1000
    mh_thin: int = 10
    mh_scale: float = 1.0
    particles: int = 2000
    pool_iid_moments: bool = False
    workers: int = 1

    def __post_init__(self):
        for name in ("n_draws", "m_test", "m_cal", "mh_burn_in", "mh_thin",
                     "particles", "workers"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise InvalidConfig(f"{name} must be an integer, got {v!r}")
        if self.n_draws < 1:
            raise InvalidConfig("n_draws must be >= 1")
        if self.m_test < 2 or self.m_cal < 2:
            raise InvalidConfig("m_test and m_cal must be >= 2")
        if self.mh_burn_in < 0 or self.mh_thin < 1 or self.workers < 1:
            raise InvalidConfig("mh_burn_in >= 0, mh_thin >= 1 and workers >= 1 required")
        if not (math.isfinite(self.mh_scale) and self.mh_scale > 0):
            raise InvalidConfig("mh_scale must be positive")
        if self.weight_mode not in WEIGHT_MODES:
            raise InvalidConfig(f"weight_mode must be one of {WEIGHT_MODES}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig("seed must fit in 64 unsigned bits")

    def replace(self, **changes) -> "DccConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class DccResult:
    pfa_u_per_draw: np.ndarray
    exceed_counts: np.ndarray
    T_obs_per_draw: np.ndarray
    thetas: np.ndarray
    pfa_u_star_hat: float
    pfa_star_hat: float
    config: DccConfig
    elapsed: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "pfa_u_star": self.pfa_u_star_hat,
            "pfa_star": self.pfa_star_hat,
            "pfa_u_per_draw": self.pfa_u_per_draw.tolist(),
            "T_obs_per_draw": self.T_obs_per_draw.tolist(),
            "thetas": self.thetas.tolist(),
            "seed": int(self.config.seed),
            "config": self.config.to_dict(),
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def as_points(values: Sequence[float]) -> np.ndarray:
    """Column array ``(n, 1)`` from a flat sequence."""
    return np.asarray(values, dtype=float).reshape(-1, 1)
