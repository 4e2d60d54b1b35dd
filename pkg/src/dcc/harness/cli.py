"""Command-line entry point: ``dcc run|experiment|calibrate|baseline``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings

import numpy as np

from dcc import baselines
from dcc.core import Dataset, DccConfig, read_csv
from dcc.engine import calibrated_criterion_values, dcc
from dcc.errors import AcceptanceOutOfRange, DataError, DccError, InvalidConfig, NumericalError
from dcc.harness.datasets import NAMES, embedded_dataset
from dcc.harness.experiments import EXPERIMENTS, ExperimentSpec, run_experiment
from dcc.harness.report import histogram, histograms_csv, to_json
from dcc.inference import weights_for
from dcc.models import KangarooSsmModel, parse_model

WEIGHT_CHOICES = ("mle", "point-mle", "mh", "pmmh")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text}")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**63:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^63)")
    return v


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dcc", description="Data consistency criterion for model classes.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    def common(sp, mc=True):
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--workers", type=_positive_int, default=1)
        if mc:
            sp.add_argument("--n-theta", type=_positive_int, help="parameter draws N")
            sp.add_argument("--m-test", type=_positive_int, help="test simulations M")
            sp.add_argument("--m-cal", type=_positive_int, help="calibration simulations M'")
            sp.add_argument("--particles", "--pf-particles", dest="particles", type=_positive_int,
                            help="particle count K")
            sp.add_argument("--mh-burnin", type=_nonneg_int, help="MH burn-in steps")
            sp.add_argument("--mh-thin", type=_positive_int, help="MH thinning interval")
            sp.add_argument("--mh-scale", type=_positive_float, help="MH proposal scale factor")

    r = sub.add_parser("run", help="criterion for one model class on a CSV dataset")
    r.add_argument("--model", required=True,
                   help="e.g. poisson, negbin, polyreg:k=3, kangaroo-ssm:K=2000,v0=5")
    r.add_argument("--data", required=True,
                   help=f"CSV path or a bundled dataset ({', '.join(NAMES)})")
    r.add_argument("--weights", choices=WEIGHT_CHOICES, default="mh")
    common(r)

    e = sub.add_parser("experiment", help="reproduce one of the bundled experiments")
    e.add_argument("name", choices=EXPERIMENTS)
    e.add_argument("--replications", type=_positive_int)
    e.add_argument("--sizes", type=_int_list, help="comma-separated sample sizes")
    e.add_argument("--calibration-reps", type=_positive_int)
    e.add_argument("--histograms-csv", help="also write histogram payloads as CSV")
    common(e)

    c = sub.add_parser("calibrate", help="simulate the criterion under a model in the class")
    c.add_argument("--model", required=True)
    c.add_argument("--theta", type=_float_list, required=True,
                   help="generating parameters, comma-separated")
    c.add_argument("--n", type=_positive_int, help="dataset size (default: template size)")
    c.add_argument("--data", help="template dataset for covariates or timestamps")
    c.add_argument("--rho", type=float, default=0.05)
    c.add_argument("--reps", type=_positive_int, default=100)
    c.add_argument("--weights", choices=WEIGHT_CHOICES, default="mh")
    common(c)

    b = sub.add_parser("baseline", help="classical goodness-of-fit test")
    b.add_argument("--test", required=True, choices=("ks", "lilliefors", "ad", "jb", "ljungbox"))
    b.add_argument("--data", required=True)
    b.add_argument("--level", type=float, default=0.05)
    b.add_argument("--reps", type=_positive_int, default=baselines.DEFAULT_CALIBRATION_REPS,
                   help="null simulations for the threshold")
    b.add_argument("--lags", type=_positive_int, help="Ljung-Box lag count h")
    b.add_argument("--d-param", type=int, default=2, help="Ljung-Box fitted parameter count")
    b.add_argument("--seed", type=_seed, default=0)
    b.add_argument("--out")
    return p


def load_data(ref: str) -> Dataset:
    if os.path.exists(ref):
        return read_csv(ref)
    if ref in NAMES:
        return embedded_dataset(ref)
    raise InvalidConfig(f"no such file or bundled dataset: {ref!r}")


def _config(args, weights) -> DccConfig:
    kw = dict(seed=args.seed, weight_mode="point-mle" if weights == "mle" else weights)
    for key, attr in (("n_draws", "n_theta"), ("m_test", "m_test"), ("m_cal", "m_cal"),
                      ("particles", "particles"), ("mh_burn_in", "mh_burnin"),
                      ("mh_thin", "mh_thin"), ("mh_scale", "mh_scale")):
        if getattr(args, attr) is not None:
            kw[key] = getattr(args, attr)
    return DccConfig(**kw)


def _config_dict(cfg: DccConfig) -> dict:
    d = cfg.to_dict()
    d.pop("workers")
    return d


def _model(spec: str, particles=None):
    model = parse_model(spec)
    if particles is not None and isinstance(model, KangarooSsmModel):
        model = KangarooSsmModel(particles=particles, init_log_var=model.init_log_var)
    return model


def cmd_run(args) -> dict:
    data = load_data(args.data)
    model = _model(args.model, args.particles)
    cfg = _config(args, args.weights)
    res = dcc(model, weights_for(model, data, cfg), data, cfg, workers=args.workers)
    entry = res.to_dict()
    entry.pop("config")
    return {"config": {"command": "run", "model": model.spec_string(), "data": args.data,
                       **_config_dict(cfg)},
            "results": [{"model": model.spec_string(), "dataset": args.data, **entry}],
            "baselines": [], "histograms": []}


def cmd_experiment(args) -> dict:
    spec = ExperimentSpec(name=args.name, seed=args.seed, replications=args.replications,
                          n_draws=args.n_theta, m_test=args.m_test, m_cal=args.m_cal,
                          particles=args.particles, sizes=args.sizes,
                          calibration_reps=args.calibration_reps, mh_burn_in=args.mh_burnin,
                          mh_thin=args.mh_thin, mh_scale=args.mh_scale, workers=args.workers)
    report = run_experiment(spec)
    if args.histograms_csv:
        with open(args.histograms_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(histograms_csv(report))
    return report


def cmd_calibrate(args) -> dict:
    model = _model(args.model, args.particles)
    template = load_data(args.data) if args.data else None
    n = args.n if args.n is not None else (template.n if template is not None else None)
    if n is None:
        raise InvalidConfig("give --n or a template via --data")
    if not 0 <= args.rho <= 1:
        raise InvalidConfig("rho must lie in [0, 1]")
    cfg = _config(args, args.weights)
    values = calibrated_criterion_values(model, args.theta, weights_for, n, args.reps, cfg,
                                         template)
    thr = float(np.quantile(values, args.rho))
    return {"config": {"command": "calibrate", "model": model.spec_string(), "theta": args.theta,
                       "n": n, "rho": args.rho, "reps": args.reps, **_config_dict(cfg)},
            "results": [{"model": model.spec_string(), "dataset": "simulated",
                         "pfa_star": values.tolist(), "threshold": thr, "seed": args.seed}],
            "baselines": [],
            "histograms": [{"label": "pfa_star", **histogram(values, 20, (0.0, 0.5))}]}


def cmd_baseline(args) -> dict:
    data = load_data(args.data)
    if not 0 < args.level < 1:
        raise InvalidConfig("level must lie in (0, 1)")
    if args.test == "ljungbox":
        if data.d != 1:
            raise InvalidConfig("Ljung-Box needs one-dimensional residuals")
        rep = baselines.ljung_box(data.column(0), h=args.lags, d_param=args.d_param,
                                  level=args.level)
    else:
        fn = {"ks": baselines.ks_fixed, "lilliefors": baselines.lilliefors,
              "ad": baselines.anderson_darling, "jb": baselines.jarque_bera}[args.test]
        rep = fn(data, level=args.level, reps=args.reps, seed=args.seed)
    return {"config": {"command": "baseline", "test": args.test, "data": args.data,
                       "level": args.level, "seed": args.seed},
            "results": [], "baselines": [rep.to_dict()], "histograms": []}


COMMANDS = {"run": cmd_run, "experiment": cmd_experiment, "calibrate": cmd_calibrate,
            "baseline": cmd_baseline}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AcceptanceOutOfRange)
            report = COMMANDS[args.command](args)
        text = to_json(report)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except NumericalError as exc:
        print(f"dcc: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (DataError, DccError) as exc:
        print(f"dcc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"dcc: error: {exc}", file=sys.stderr)
        return 1
    print(f"dcc: {args.command} finished in {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
