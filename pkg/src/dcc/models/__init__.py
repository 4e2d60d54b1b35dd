"""Built-in model classes and the CLI model-string parser."""

from dcc.errors import InvalidConfig
from dcc.models.autoregressive import (
    LinearAr1Model,
    SaturatedAr1Generator,
    ar1_incremental_logliks,
    ar1_residuals,
)
from dcc.models.densities import (
    gaussian_logpdf,
    negbin_from_mean_var,
    negbin_logpmf,
    poisson_logpmf,
)
from dcc.models.iid import GaussianIidModel, NegBinomialModel, PoissonModel
from dcc.models.kangaroo import INIT_LOG_VAR, KangarooSsmModel
from dcc.models.regression import PolyRegressionModel

__all__ = [
    "GaussianIidModel", "PoissonModel", "NegBinomialModel", "PolyRegressionModel",
    "LinearAr1Model", "SaturatedAr1Generator", "KangarooSsmModel",
    "gaussian_logpdf", "poisson_logpmf", "negbin_logpmf", "negbin_from_mean_var",
    "ar1_incremental_logliks", "ar1_residuals", "parse_model",
]


def _options(text):
    opts = {}
    for part in filter(None, text.split(",")):
        key, sep, value = part.partition("=")
        if not sep:
            raise InvalidConfig(f"malformed model option {part!r}")
        opts[key.strip()] = value.strip()
    return opts


def parse_model(spec: str):
    """Build a model from strings like ``poisson`` or ``polyreg:k=3``."""
    name, _, rest = spec.strip().partition(":")
    opts = _options(rest)
    try:
        if name == "gaussian-fixed" and not opts:
            return GaussianIidModel(free=False)
        if name == "gaussian" and not opts:
            return GaussianIidModel(free=True)
        if name == "poisson" and not opts:
            return PoissonModel()
        if name == "negbin" and not opts:
            return NegBinomialModel()
        if name == "ar1" and not opts:
            return LinearAr1Model()
        if name == "polyreg" and set(opts) <= {"k"}:
            return PolyRegressionModel(order=int(opts.get("k", 1)))
        if name == "kangaroo-ssm" and set(opts) <= {"K", "v0"}:
            return KangarooSsmModel(particles=int(opts.get("K", 2000)),
                                    init_log_var=float(opts.get("v0", INIT_LOG_VAR)))
    except ValueError as exc:
        raise InvalidConfig(f"bad model specification {spec!r}: {exc}") from None
    raise InvalidConfig(f"unknown model specification {spec!r}")
