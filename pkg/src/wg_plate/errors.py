"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """Raised for malformed inputs (bad mesh sizes, unknown families, bad polygons)."""


class UnsupportedDegreeError(ValueError):
    """Raised when a quadrature degree falls outside the supported range."""


class ConditioningError(ArithmeticError):
    """Raised when a local mass matrix is too ill-conditioned to invert reliably."""

    def __init__(self, message, cells=()):
        super().__init__(message)
        self.cells = tuple(cells)


class SolverError(RuntimeError):
    """Raised when a linear solve fails (non-SPD pivot, iteration cap)."""


class NotSPDError(SolverError):
    """Raised when a reduced global matrix fails the positive-definiteness check."""


class ConfigError(ValueError):
    """Raised for malformed experiment configuration (unknown key, bad value)."""
