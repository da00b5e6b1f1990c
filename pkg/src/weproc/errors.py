"""Exception types shared across the package."""


class WeprocError(Exception):
    """Base class for all package errors."""


class DomainError(WeprocError, ValueError):
    """An argument lies outside the documented domain."""


class ZeroMassError(DomainError):
    """Conditioning interval carries zero probability mass."""


class DivergenceError(WeprocError, ArithmeticError):
    """An integral or conditional moment does not converge."""


class QuadratureBudgetError(WeprocError, ArithmeticError):
    """Adaptive refinement exhausted its budget without converging."""


class FactorizationError(WeprocError):
    """A covariance matrix could not be factorized, even with jitter."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ConfigError(WeprocError, ValueError):
    """A configuration document failed validation."""
