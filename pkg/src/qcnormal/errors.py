"""Exception types raised across the package."""


class QCNormalError(Exception):
    """Base class for every error raised by qcnormal."""


class DomainError(QCNormalError, ValueError):
    """A point lies outside the validity radius or hits a pole."""


class OrbitEscape(QCNormalError):
    """An iterate left the validity disk of the map.

    ``orbit`` holds the iterates computed before the escape.
    """

    def __init__(self, message, orbit=None):
        super().__init__(message)
        self.orbit = orbit


class NoConvergence(QCNormalError, ArithmeticError):
    def __init__(self, message, last_delta=None):
        super().__init__(message)
        self.last_delta = last_delta


class DerivativeVanished(QCNormalError, ZeroDivisionError):
    pass


class NotAnalytic(QCNormalError, TypeError):
    pass


class WrongFixedPointClass(QCNormalError, ValueError):
    """The requested construction does not apply to this fixed point."""


class ControlViolated(QCNormalError):
    pass


class TooManyInvalidNodes(QCNormalError):
    pass


class ExtrapolationNeeded(QCNormalError, ValueError):
    pass


class DegenerateInput(QCNormalError, ValueError):
    pass


class OutOfRange(QCNormalError, ValueError):
    pass


class FitFailed(QCNormalError):
    pass


class GridMismatch(QCNormalError, ValueError):
    pass


class ContinuityBreach(QCNormalError):
    pass


class DegenerateLeading(QCNormalError, ValueError):
    pass


class BranchAmbiguity(QCNormalError):
    pass


class NonCrossingViolated(QCNormalError):
    pass


class BranchFailure(QCNormalError):
    pass


class ConfigError(QCNormalError, ValueError):
    pass


class ManifestMismatch(QCNormalError):
    pass
