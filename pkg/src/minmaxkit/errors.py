"""Exception hierarchy shared by every module of the package."""


class MinMaxError(Exception):
    """Base class for all errors raised by minmaxkit."""


class DimensionMismatch(MinMaxError, ValueError):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class NonFiniteEvaluation(MinMaxError, FloatingPointError):
    pass


class IllPosedProx(MinMaxError, ValueError):
    """Raised when step * weak_convexity >= 1 (prox not single-valued)."""


class MissingProxOracle(MinMaxError, ValueError):
    pass


class MaxIterExceeded(MinMaxError, RuntimeError):
    """Iterative routine hit its budget. ``best`` holds the last iterate."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class TraceIncomplete(MinMaxError, ValueError):
    pass


class OutOfRangeStepSize(MinMaxError, ValueError):
    pass


class DenominatorNonpositive(OutOfRangeStepSize):
    pass


class ConstraintViolated(MinMaxError, ValueError):
    pass


class ConfigParse(MinMaxError, ValueError):
    pass
