"""Exception types shared across the package."""


class ErgolabError(Exception):
    """Base class for all package errors."""


class OutsideDomain(ErgolabError):
    pass


class PointOnPartitionBoundary(ErgolabError):
    pass


class OutsideImage(ErgolabError):
    pass


class NoConvergence(ErgolabError):
    pass


class InvalidGamma(ErgolabError):
    pass


class ReturnCapExceeded(ErgolabError):
    pass


class InsufficientData(ErgolabError):
    pass


class DegenerateWindow(ErgolabError):
    pass


class OutOfRange(ErgolabError):
    pass


class TruncationTooCoarse(ErgolabError):
    pass


class EmptyCylinder(ErgolabError):
    pass


class Reducible(ErgolabError):
    pass


class PrecisionFloor(ErgolabError):
    pass


class NumericalAccuracyLoss(ErgolabError):
    pass


class ConfigError(ErgolabError):
    pass
