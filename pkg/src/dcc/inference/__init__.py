"""Parameter-weight back-ends: point MLE, random-walk MH and PMMH."""

from dcc.inference.fitters import (
    fit_mle,
    mle_ar1,
    mle_gaussian,
    mle_negbin,
    mle_poisson,
    mle_polyreg,
)
from dcc.inference.mcmc import (
    MetropolisHastingsSampler,
    PmmhSampler,
    PointSampler,
    metropolis_hastings,
    mh_weight_sampler,
    pmmh_weight_sampler,
    point_mle_sampler,
    weights_for,
)

__all__ = [
    "fit_mle", "mle_ar1", "mle_gaussian", "mle_negbin", "mle_poisson", "mle_polyreg",
    "MetropolisHastingsSampler", "PmmhSampler", "PointSampler", "metropolis_hastings",
    "mh_weight_sampler", "pmmh_weight_sampler", "point_mle_sampler", "weights_for",
]
