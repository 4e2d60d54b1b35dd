"""Reproducible experiment drivers.

Each driver returns a JSON-ready report with the keys ``config``,
``results``, ``baselines``, ``histograms`` and ``tables``. Replications use
seeds derived from ``(seed, EXPERIMENT, tag, ...)`` and may run on several
threads; the assembled report does not depend on the worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from dcc import baselines, streams
from dcc.core import Dataset, DccConfig, ModelClass
from dcc.engine import dcc, threshold_exact
from dcc.errors import AcceptanceOutOfRange, InvalidConfig, NonPositiveDof
from dcc.harness.datasets import embedded_dataset
from dcc.harness.report import histogram
from dcc.inference import mle_ar1, mle_polyreg, weights_for
from dcc.models import (
    GaussianIidModel,
    KangarooSsmModel,
    LinearAr1Model,
    NegBinomialModel,
    PoissonModel,
    PolyRegressionModel,
    SaturatedAr1Generator,
    ar1_residuals,
)

EXPERIMENTS = ("earthquake", "gaussian", "regression", "ar", "kangaroo")

# per-experiment defaults: Monte Carlo sizes and replication counts
DEFAULTS = {
    "earthquake": dict(n_draws=200, m_test=200, m_cal=200, replications=1),
    "gaussian": dict(n_draws=50, m_test=100, m_cal=100, replications=1000, sizes=(10, 100, 1000)),
    "regression": dict(n_draws=100, m_test=100, m_cal=100, replications=100),
    "ar": dict(n_draws=200, m_test=200, m_cal=200, replications=1000, sizes=(10, 100, 1000)),
    "kangaroo": dict(n_draws=1000, m_test=200, m_cal=200, replications=1, particles=2000),
}

# stream tags under EXPERIMENT
_TAG_DATA, _TAG_CAL_DATA, _TAG_RUN, _TAG_CAL_RUN, _TAG_MISC = range(5)

HIST_BINS = 20


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    seed: int = 0
    replications: Optional[int] = None
    n_draws: Optional[int] = None
    m_test: Optional[int] = None
    m_cal: Optional[int] = None
    particles: Optional[int] = None
    sizes: Optional[tuple] = None
    calibration_reps: Optional[int] = None
    mh_burn_in: Optional[int] = None
    mh_thin: Optional[int] = None
    mh_scale: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise InvalidConfig(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        for key in ("replications", "n_draws", "m_test", "m_cal", "particles", "calibration_reps"):
            v = getattr(self, key)
            if v is not None and v < 1:
                raise InvalidConfig(f"{key} must be >= 1")
        if self.workers < 1:
            raise InvalidConfig("workers must be >= 1")
        if self.sizes is not None and any(int(n) < 2 for n in self.sizes):
            raise InvalidConfig("sample sizes must be >= 2")

    def setting(self, key):
        v = getattr(self, key)
        return DEFAULTS[self.name].get(key) if v is None else v

    def dcc_config(self, weight_mode: str, seed: int) -> DccConfig:
        extra = {}
        if self.setting("particles") is not None:
            extra["particles"] = int(self.setting("particles"))
        for key in ("mh_burn_in", "mh_thin", "mh_scale"):
            if getattr(self, key) is not None:
                extra[key] = getattr(self, key)
        return DccConfig(n_draws=int(self.setting("n_draws")), m_test=int(self.setting("m_test")),
                         m_cal=int(self.setting("m_cal")), seed=seed, weight_mode=weight_mode,
                         **extra)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("workers")
        for key in DEFAULTS[self.name]:
            out[key] = self.setting(key)
        if out["sizes"] is not None:
            out["sizes"] = [int(n) for n in out["sizes"]]
        return out


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _run(model: ModelClass, data: Dataset, cfg: DccConfig):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AcceptanceOutOfRange)
        return dcc(model, weights_for(model, data, cfg), data, cfg, workers=1)


def _result_entry(model: ModelClass, dataset: str, res) -> dict:
    d = res.to_dict()
    d.pop("config")
    return {"model": model.spec_string(), "dataset": dataset, **d}


def _group_entry(model: str, dataset: str, seed: int, pfa_u_star, pfa_star, **extra) -> dict:
    return {"model": model, "dataset": dataset, "seed": seed,
            "pfa_u_star": [float(v) for v in pfa_u_star],
            "pfa_star": [float(v) for v in pfa_star],
            "pfa_u_per_draw": None, **extra}


def _report(spec: ExperimentSpec) -> dict:
    config = spec.to_dict()
    config["experiment"] = config.pop("name")
    return {"config": config, "results": [], "baselines": [], "histograms": [], "tables": []}


# --------------------------------------------------------------------------
# earthquake counts
# --------------------------------------------------------------------------
def earthquake(spec: ExperimentSpec) -> dict:
    """Poisson and negative binomial classes on the four magnitude series."""
    report = _report(spec)
    cells = [(mag, cls) for mag in (8, 7, 6, 5) for cls in (PoissonModel, NegBinomialModel)]

    def one(i):
        mag, cls = cells[i]
        model = cls()
        data = embedded_dataset(f"earthquake-m{mag}")
        cfg = spec.dcc_config("mh", streams.child_seed(spec.seed, streams.EXPERIMENT, _TAG_RUN, i))
        return _result_entry(model, f"earthquake-m{mag}", _run(model, data, cfg))

    report["results"] = _map(one, range(len(cells)), spec.workers)
    table = {"name": "earthquake", "rows": ["poisson", "negbin"],
             "columns": [">=8", ">=7", ">=6", ">=5"],
             "values": [[r["pfa_star"] for r in report["results"] if r["model"] == m]
                        for m in ("poisson", "negbin")]}
    report["tables"].append(table)
    return report


# --------------------------------------------------------------------------
# Gaussian classes
# --------------------------------------------------------------------------
_GAUSS_SOURCES = {
    "normal": lambda rng, n: rng.standard_normal(n),
    "uniform": lambda rng, n: rng.random(n),
}
_GAUSS_CLASSES = ("gaussian-fixed", "gaussian")
_NORMALITY = {"gaussian-fixed": ("ks",), "gaussian": ("ad", "lilliefors", "jb")}
LEVELS = (0.10, 0.05)


def _gaussian_dcc(spec, cls_name, y, seed):
    model = GaussianIidModel(free=cls_name == "gaussian")
    data = Dataset(y[:, None])
    if model.free:
        cfg = spec.dcc_config("mh", seed)
    else:
        # one model in the class, so a single draw carries all the weight
        cfg = spec.dcc_config("point-mle", seed).replace(n_draws=1)
    res = _run(model, data, cfg)
    return res.pfa_u_star_hat, res.pfa_star_hat


def gaussian_replications(spec: ExperimentSpec, source: str, cls_name: str, n: int,
                          reps: int, tag: int = _TAG_DATA) -> tuple:
    """``(pfa_u*, pfa*)`` arrays over ``reps`` datasets of size ``n`` from ``source``."""
    src = list(_GAUSS_SOURCES).index(source)
    cls = _GAUSS_CLASSES.index(cls_name)

    def one(rep):
        rng = streams.stream(spec.seed, streams.EXPERIMENT, tag, src, n, rep)
        y = _GAUSS_SOURCES[source](rng, n)
        seed = streams.child_seed(spec.seed, streams.EXPERIMENT, tag + 2, src, cls, n, rep)
        return _gaussian_dcc(spec, cls_name, y, seed)

    out = np.array(_map(one, range(reps), spec.workers))
    return out[:, 0], out[:, 1]


def gaussian_datasets(spec: ExperimentSpec, source: str, n: int, reps: int) -> np.ndarray:
    src = list(_GAUSS_SOURCES).index(source)
    return np.array([_GAUSS_SOURCES[source](
        streams.stream(spec.seed, streams.EXPERIMENT, _TAG_DATA, src, n, rep), n)
        for rep in range(reps)])


def gaussian(spec: ExperimentSpec, classes: Sequence[str] = _GAUSS_CLASSES,
             table: bool = True) -> dict:
    """Histograms of the criterion over replications and the rejection table.

    The table (at n = 100) compares the criterion with classical normality
    tests. The free class uses a threshold calibrated on separate N(0, 1)
    replications, the fixed class uses ``rho / 2``.
    """
    report = _report(spec)
    reps = int(spec.setting("replications"))
    values = {}
    for n in spec.setting("sizes"):
        for source in _GAUSS_SOURCES:
            for cls_name in classes:
                u, s = gaussian_replications(spec, source, cls_name, n, reps)
                values[(n, source, cls_name)] = (u, s)
                report["results"].append(_group_entry(cls_name, f"{source} n={n}", spec.seed, u, s))
                report["histograms"].append({"label": f"{cls_name} {source} n={n} pfa_star",
                                             **histogram(s, HIST_BINS, (0.0, 0.5))})
                if cls_name == "gaussian-fixed" and source == "normal":
                    report["histograms"].append({"label": f"{cls_name} {source} n={n} pfa_u",
                                                 **histogram(u, HIST_BINS, (0.0, 1.0))})
    if table:
        report["tables"].append(rejection_table(spec, classes, values))
        report["baselines"] = report["tables"][-1].pop("baseline_reports")
    return report


def rejection_table(spec: ExperimentSpec, classes, values: dict, n: int = 100) -> dict:
    reps = int(spec.setting("replications"))
    cal_reps = int(spec.calibration_reps or reps)
    rows, base_rows = {}, {}
    thresholds = {}
    for cls_name in classes:
        key_n, key_u = (n, "normal", cls_name), (n, "uniform", cls_name)
        s_n = values[key_n][1] if key_n in values else gaussian_replications(
            spec, "normal", cls_name, n, reps)[1]
        s_u = values[key_u][1] if key_u in values else gaussian_replications(
            spec, "uniform", cls_name, n, reps)[1]
        if cls_name == "gaussian":
            _, cal = gaussian_replications(spec, "normal", cls_name, n, cal_reps, tag=_TAG_CAL_DATA)
            thr = {rho: float(np.quantile(cal, rho)) for rho in LEVELS}
        else:
            thr = {rho: threshold_exact(rho) for rho in LEVELS}
        thresholds[cls_name] = thr
        rows[cls_name] = {rho: [float(np.mean(s_n < thr[rho])), float(np.mean(s_u < thr[rho]))]
                          for rho in LEVELS}
    ys = {src: gaussian_datasets(spec, src, n, reps) for src in _GAUSS_SOURCES}
    base_reports = []
    for cls_name in classes:
        for test in _NORMALITY[cls_name]:
            stat = baselines.STATISTICS[test]
            for rho in LEVELS:
                thr = baselines.calibrated_threshold(test, n, rho)
                rates = [float(np.mean(stat(ys[src]) > thr)) for src in _GAUSS_SOURCES]
                base_rows.setdefault(test, {})[rho] = rates
                base_reports.append({"test": baselines.TEST_NAMES[test], "class": cls_name,
                                     "level": rho, "threshold": thr, "n": n,
                                     "rejection_normal": rates[0], "rejection_uniform": rates[1]})
    return {"name": "rejection", "n": n, "replications": reps, "calibration_reps": cal_reps,
            "thresholds": {c: {str(r): v for r, v in t.items()} for c, t in thresholds.items()},
            "dcc": {c: {str(r): v for r, v in t.items()} for c, t in rows.items()},
            "classical": {t: {str(r): v for r, v in d.items()} for t, d in base_rows.items()},
            "baseline_reports": base_reports}


# --------------------------------------------------------------------------
# polynomial regression
# --------------------------------------------------------------------------
def regression_generator() -> tuple:
    """Cubic coefficients and noise variance fitted to the bundled regression data."""
    data = embedded_dataset("regression-cubic")
    beta, rss_n = mle_polyreg(data, data.timestamps, 3)
    return beta, rss_n * data.n / (data.n - 4)


def regression(spec: ExperimentSpec, orders: Sequence[int] = (1, 2, 3)) -> dict:
    report = _report(spec)
    beta, var = regression_generator()
    bundled = embedded_dataset("regression-cubic")
    x = bundled.timestamps
    mean = np.vander(x, 4, increasing=True) @ beta
    reps = int(spec.setting("replications"))

    for k in orders:
        model = PolyRegressionModel(order=k)
        cfg = spec.dcc_config("mh", streams.child_seed(spec.seed, streams.EXPERIMENT, _TAG_MISC, k))
        report["results"].append(_result_entry(model, "regression-cubic", _run(model, bundled, cfg)))

    def one(item):
        rep, k = item
        rng = streams.stream(spec.seed, streams.EXPERIMENT, _TAG_DATA, rep)
        data = Dataset((mean + math.sqrt(var) * rng.standard_normal(x.size))[:, None], x)
        model = PolyRegressionModel(order=k)
        cfg = spec.dcc_config("mh", streams.child_seed(spec.seed, streams.EXPERIMENT, _TAG_RUN, rep, k))
        res = _run(model, data, cfg)
        return res.pfa_u_star_hat, res.pfa_star_hat

    items = [(rep, k) for k in orders for rep in range(reps)]
    out = np.array(_map(one, items, spec.workers)).reshape(len(orders), reps, 2)
    for i, k in enumerate(orders):
        report["results"].append(_group_entry(f"polyreg:k={k}", "simulated cubic", spec.seed,
                                              out[i, :, 0], out[i, :, 1]))
        report["histograms"].append({"label": f"polyreg:k={k} pfa_star",
                                     **histogram(out[i, :, 1], HIST_BINS, (0.0, 0.5))})
    report["tables"].append({"name": "regression", "generator_beta": beta.tolist(),
                             "generator_var": var, "orders": list(orders),
                             "fraction_below_0.05": [float(np.mean(out[i, :, 1] <= 0.05))
                                                     for i in range(len(orders))],
                             "fraction_above_0.15": [float(np.mean(out[i, :, 1] >= 0.15))
                                                     for i in range(len(orders))]})
    return report


# --------------------------------------------------------------------------
# autoregressive
# --------------------------------------------------------------------------
def ar_pseudo_true(seed: int = 0, n: int = 200_000) -> np.ndarray:
    """Linear AR(1) fit to a long saturated series: the best model in the class."""
    y = SaturatedAr1Generator().sample(n, streams.stream(seed, streams.EXPERIMENT, _TAG_MISC, 0))[0]
    return np.array(mle_ar1(y))


def _ljung_box_p(e, d_param):
    try:
        return baselines.ljung_box(e, d_param=d_param).p_value
    except NonPositiveDof:
        return None


def ar_replications(spec: ExperimentSpec, n: int, reps: int) -> dict:
    gen = SaturatedAr1Generator()
    model = LinearAr1Model()

    def one(rep):
        y = gen.sample(n, streams.stream(spec.seed, streams.EXPERIMENT, _TAG_DATA, n, rep))[0]
        a, _ = mle_ar1(y)
        e = ar1_residuals(y, a)
        cfg = spec.dcc_config("mh", streams.child_seed(spec.seed, streams.EXPERIMENT, _TAG_RUN, n, rep))
        res = _run(model, Dataset(y[:, None]), cfg)
        return res.pfa_u_star_hat, res.pfa_star_hat, _ljung_box_p(e, 2), _ljung_box_p(e, 1)

    out = _map(one, range(reps), spec.workers)
    return {"pfa_u_star": np.array([o[0] for o in out]), "pfa_star": np.array([o[1] for o in out]),
            "lb_p": [o[2] for o in out], "lb_p_d1": [o[3] for o in out]}


def ar_calibration(spec: ExperimentSpec, n: int, reps: int, theta) -> np.ndarray:
    model = LinearAr1Model()

    def one(rep):
        data = model.simulate(theta, Dataset(np.zeros((n, 1))),
                              streams.stream(spec.seed, streams.EXPERIMENT, _TAG_CAL_DATA, n, rep))
        cfg = spec.dcc_config("mh", streams.child_seed(spec.seed, streams.EXPERIMENT,
                                                        _TAG_CAL_RUN, n, rep))
        return _run(model, data, cfg).pfa_star_hat

    return np.array(_map(one, range(reps), spec.workers))


def ar(spec: ExperimentSpec) -> dict:
    """Linear AR(1) class against saturated AR(1) data, next to Ljung-Box."""
    report = _report(spec)
    reps = int(spec.setting("replications"))
    theta = ar_pseudo_true(spec.seed)
    rows = []
    for n in spec.setting("sizes"):
        r = ar_replications(spec, n, reps)
        report["results"].append(_group_entry("ar1", f"saturated-ar1 n={n}", spec.seed,
                                              r["pfa_u_star"], r["pfa_star"]))
        report["histograms"].append({"label": f"ar1 n={n} pfa_star",
                                     **histogram(r["pfa_star"], HIST_BINS, (0.0, 0.5))})
        row = {"n": n, "dcc_below_0.05": float(np.mean(r["pfa_star"] < 0.05))}
        for key, d in (("lb_p", 2), ("lb_p_d1", 1)):
            ps = [p for p in r[key] if p is not None]
            entry = {"test": "Ljung-Box", "n": n, "d_param": d, "p_values": ps,
                     "available": len(ps) == reps}
            if ps:
                entry["rejection_0.05"] = float(np.mean(np.array(ps) < 0.05))
                report["histograms"].append({"label": f"ljung-box d={d} n={n} p",
                                             **histogram(ps, HIST_BINS, (0.0, 1.0))})
            report["baselines"].append(entry)
            row[f"lb_d{d}_rejection_0.05"] = entry.get("rejection_0.05")
        if spec.calibration_reps:
            cal = ar_calibration(spec, n, int(spec.calibration_reps), theta)
            thr = float(np.quantile(cal, 0.05))
            row["calibrated_threshold_0.05"] = thr
            row["dcc_calibrated_rejection_0.05"] = float(np.mean(r["pfa_star"] < thr))
        rows.append(row)
    report["tables"].append({"name": "ar", "calibration_theta": theta.tolist(), "rows": rows})
    return report


# --------------------------------------------------------------------------
# kangaroo state-space model
# --------------------------------------------------------------------------
def kangaroo(spec: ExperimentSpec) -> dict:
    report = _report(spec)
    model = KangarooSsmModel(particles=int(spec.setting("particles")))
    data = embedded_dataset("kangaroo")
    cfg = spec.dcc_config("pmmh", streams.child_seed(spec.seed, streams.EXPERIMENT, _TAG_RUN, 0))
    report["results"].append(_result_entry(model, "kangaroo", _run(model, data, cfg)))
    return report


DRIVERS = {"earthquake": earthquake, "gaussian": gaussian, "regression": regression,
           "ar": ar, "kangaroo": kangaroo}


def run_experiment(spec: ExperimentSpec) -> dict:
    return DRIVERS[spec.name](spec)
