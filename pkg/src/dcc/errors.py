"""Exception hierarchy.

Input problems derive from :class:`DataError` (a ``ValueError``); failures of a
numerical procedure derive from :class:`NumericalError`. The CLI maps the
former to exit code 1 and the latter to exit code 2.
"""


class DccError(Exception):
    """Base class for every error raised by this package."""


class DataError(DccError, ValueError):
    pass


class NumericalError(DccError, ArithmeticError):
    pass


# --- datasets -------------------------------------------------------------
class EmptyData(DataError):
    pass


class RaggedDimensions(DataError):
    pass


class NonIncreasingTimestamps(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class UnknownDataset(DataError):
    pass


# --- parameters and densities --------------------------------------------
class OutOfParameterSpace(DataError):
    pass


class NonPositiveVariance(DataError):
    pass


class NegativeCount(DataError):
    pass


class NonIntegerCount(DataError):
    pass


class UnderdispersedParameters(DataError):
    pass


class NonStationaryCoefficient(DataError):
    pass


class BadRange(DataError):
    pass


class LengthMismatch(DataError):
    pass


class InvalidConfig(DataError):
    pass


# --- numerical failures ---------------------------------------------------
class DegenerateVariance(NumericalError):
    pass


class ParticleCollapse(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


class AllZeroCounts(NumericalError):
    pass


class Underdispersed(NumericalError):
    """Sample variance does not exceed the sample mean.

    ``boundary`` holds the ``(r, p)`` pair at the Poisson edge of the negative
    binomial family that the likelihood approaches in this case.
    """

    def __init__(self, message, boundary=None):
        super().__init__(message)
        self.boundary = boundary


class NoConvergence(NumericalError):
    pass


class RankDeficientDesign(NumericalError):
    pass


class DegenerateStart(NumericalError):
    pass


class WeightSamplerFailure(NumericalError):
    pass


class NonPositiveDof(NumericalError):
    pass


class AcceptanceOutOfRange(UserWarning):
    """Emitted when an MCMC acceptance rate falls outside [0.1, 0.6]."""
