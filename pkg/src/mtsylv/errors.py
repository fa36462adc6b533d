"""Exception types shared across the package."""


class MtsylvError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(MtsylvError, ValueError):
    """Non-finite entries, mismatched dimensions, or malformed arguments."""


class InvalidWindowError(InvalidInputError):
    """Extrapolation window is empty or has an inconsistent length."""


class SpectraOverlapError(MtsylvError):
    """Lambda(A) and Lambda(-B) (nearly) intersect; the two-term operator is singular."""


class NumericalFailureError(MtsylvError):
    """An underlying matrix iteration failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class OracleTooLargeError(MtsylvError):
    """The vectorized reference problem exceeds the configured size cap."""


class NoUniqueSolutionError(MtsylvError):
    """The vectorized system matrix is numerically singular."""


class ShiftFailureError(MtsylvError):
    """A shifted linear system could not be solved."""

    def __init__(self, message, shift=None):
        super().__init__(message)
        self.shift = shift


class DivergedError(MtsylvError):
    """The outer iteration crossed the divergence threshold.

    Carries the trace accumulated up to the point of failure in ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class MatrixMarketError(MtsylvError, ValueError):
    """Malformed Matrix Market file; ``lineno`` is 1-based when known."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
