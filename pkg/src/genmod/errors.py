"""Exception types shared across the package."""


class GenModError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GenModError, ValueError):
    """Invalid user-supplied configuration (sizes, fractions, parameters)."""


class DomainError(GenModError, ValueError):
    """An input lies outside the domain of a function, e.g. a sample outside [-1, 1]."""


class DegenerateInputError(GenModError, ValueError):
    """Input data makes the requested computation ill-defined (zero target, zero norm, ...)."""


class ConvergenceError(GenModError, RuntimeError):
    """An iterative solver failed to meet its stopping criterion."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class NumericalDegeneracyError(GenModError, ArithmeticError):
    """A factorization hit a (numerically) rank-deficient matrix."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DivergenceError(GenModError, FloatingPointError):
    """An optimizer produced non-finite values."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class CoefficientPositivityError(GenModError, ValueError):
    """The diffusion coefficient is not strictly positive, so the FEM system is not SPD."""
