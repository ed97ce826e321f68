"""Exception hierarchy shared by all specrecon modules."""


class SpecreconError(Exception):
    """Base class for every error raised by this package."""


class NonFiniteError(SpecreconError):
    pass


class NegativeEigenvalueError(SpecreconError):
    pass


class EmptySpectrumError(SpecreconError):
    pass


class SingletonSpectrumError(SpecreconError):
    pass


class IndexOutOfRangeError(SpecreconError):
    pass


class SizeMismatchError(SpecreconError):
    pass


class PoleHitError(SpecreconError):
    pass


class InterlacingViolationError(SpecreconError):
    pass


class ZeroGapError(SpecreconError):
    pass


class ShapeMismatchError(SpecreconError):
    pass


class NotSymmetricError(SpecreconError):
    pass


class NoConvergenceError(SpecreconError):
    pass


class BracketFailureError(SpecreconError):
    pass


class UnknownStatisticError(SpecreconError):
    pass


class WindowTooWideError(SpecreconError):
    pass


class QuadratureFailureError(SpecreconError):
    pass


class NegativeDensityError(SpecreconError):
    pass


class EmptySeriesError(SpecreconError):
    pass


class ConfigParseError(SpecreconError):
    pass
