"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent input data (files, matrices, edge lists)."""


class ConfigError(ValueError):
    """Invalid configuration values."""


class NumericalError(RuntimeError):
    """Numerical failure (non-convergent or ill-posed subproblem)."""


class DegenerateTestError(RuntimeError):
    """Raised when no cell of the rectangle partition carries information."""
