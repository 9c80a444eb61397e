"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class MrcStatError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(MrcStatError):
    """A numerical kernel failed (CLI exit code 2)."""


class InputError(MrcStatError, ValueError):
    """Invalid user-supplied parameters (CLI exit code 1)."""


class NonConvergence(NumericalError):
    """Adaptive quadrature exceeded its refinement budget."""

    def __init__(self, message: str, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ConvergenceFailure(NumericalError):
    """Eigenvalue solver did not converge."""


class NotPositiveSemidefinite(NumericalError):
    """Matrix has eigenvalues significantly below zero."""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ZeroDenominator(NumericalError):
    """Pattern-weighted PAS power is zero for one of the elements."""


class OrderOverflow(NumericalError):
    """Auxiliary recursion left the double range.

    ``max_valid_order`` is the largest order whose values were still finite.
    ``best_effort`` optionally carries the value computed at that order.
    """

    def __init__(self, message: str, max_valid_order: int, best_effort=None):
        super().__init__(message)
        self.max_valid_order = max_valid_order
        self.best_effort = best_effort


class InvalidWavelength(InputError):
    pass


class InvalidCount(InputError):
    pass


class UndefinedForIsotropic(InputError):
    pass


class ScenarioError(InputError):
    """Scenario validation failed; ``violations`` holds ``(path, message)`` pairs."""

    def __init__(self, violations):
        self.violations = list(violations)
        text = "; ".join(f"{path}: {msg}" for path, msg in self.violations)
        super().__init__(f"invalid scenario: {text}")
