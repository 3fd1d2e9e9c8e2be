"""Exception types raised by :mod:`mlorder`."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class AccuracyError(ArithmeticError):
    """A series or quadrature did not reach the requested accuracy."""


class MLOverflowError(OverflowError):
    """The value overflows double precision.

    The natural logarithm of the value is attached as :attr:`log_value` so
    that callers can keep working in log space.
    """

    def __init__(self, message: str, log_value: float, sign: int = 1) -> None:
        super().__init__(message)
        self.log_value = log_value
        self.sign = sign


class InconsistencyError(RuntimeError):
    """A numerical consistency check failed under verified hypotheses."""
