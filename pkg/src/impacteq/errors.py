"""Exception hierarchy.

Validation failures derive from :class:`ValidationError` so callers (the CLI in
particular) can map the whole family to one exit code.
"""


class ImpactEqError(Exception):
    """Base class for all package errors."""


class ValidationError(ImpactEqError, ValueError):
    pass


class NonSPDCovariance(ValidationError):
    pass


class NonDiagonalCost(ValidationError):
    pass


class InadmissibleNoise(ValidationError):
    pass


class BadDimension(ValidationError):
    pass


class DimensionMismatch(ImpactEqError, ValueError):
    pass


class GridMismatch(ImpactEqError, ValueError):
    pass


class BadSeed(ImpactEqError, ValueError):
    pass


class TimeOrder(ImpactEqError, ValueError):
    pass


class UnsupportedKind(ImpactEqError, TypeError):
    pass


class BadIndex(ImpactEqError, IndexError):
    pass


class UnequalToleranceUnsupported(ImpactEqError, ValueError):
    pass


class WrongN(ImpactEqError, ValueError):
    pass


class SpectralFailure(ImpactEqError, ArithmeticError):
    pass


class SingularSystem(ImpactEqError, ArithmeticError):
    pass


class SingularKKT(SingularSystem):
    pass


class NoConvergence(ImpactEqError, RuntimeError):
    def __init__(self, message, iterations=None, contraction_ratio=None):
        super().__init__(message)
        self.iterations = iterations
        self.contraction_ratio = contraction_ratio


class ConfigParse(ImpactEqError, ValueError):
    pass


class BadSweepValue(ImpactEqError, ValueError):
    pass
