"""Exception types shared by the numerical modules."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class NumericalError(RuntimeError):
    """A numerical routine missed its accuracy target.

    The best available estimate and its achieved error are attached so that
    callers can decide whether to use them anyway.
    """

    def __init__(self, message: str, estimate=None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NonConvergenceError(NumericalError):
    """An iterative refinement schedule finished without meeting its threshold."""

    def __init__(self, message: str, result=None):
        super().__init__(message, estimate=result)
        self.result = result
