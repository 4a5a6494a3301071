"""Exception types shared across the package."""


class DdaeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DdaeError, ValueError):
    """Matrix or vector dimensions are inconsistent."""


class DecompositionError(DdaeError):
    """Block decomposition failed (rank inconsistency, singular E11)."""


class AssumptionError(DdaeError):
    """A standing assumption (nonsingular algebraic block) is violated."""


class EvaluationError(DdaeError):
    """Transfer function evaluation hit a (numerically) singular matrix.

    Carries the evaluation point so callers can report where.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class InstabilityError(DdaeError):
    """A characteristic root was detected on the imaginary axis."""


class UnboundedNormError(DdaeError):
    """The requested norm is unbounded (delay-difference part not strongly stable)."""


class ConvergenceError(DdaeError):
    """An iteration failed to converge within its documented budget."""
