class ScoutError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(ScoutError, ValueError):
    """Invalid grid, boundary, problem or scheme configuration."""


class CoverageError(ScoutError, ValueError):
    """A point falls outside the ghost-extended index range."""


class FootSolverError(ScoutError, RuntimeError):
    """The characteristic-foot solver could not bracket or locate a root.

    ``diagnostics`` carries the offending departure points and bracket
    sizes so callers can log them.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class LinearSolverError(ScoutError, ArithmeticError):
    """Zero pivot met during a tridiagonal elimination."""
