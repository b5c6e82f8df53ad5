"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class PHSenseError(Exception):
    """Base class for all package errors."""


class InvalidArgument(PHSenseError, ValueError):
    """An argument is outside the accepted domain (shape, sign, range)."""


class SingularParameterError(InvalidArgument):
    """A parameter sits exactly on a point where the requested object has no finite form."""


class SingularMetricError(SingularParameterError):
    """The metric operator diverges (b_lambda == kappa * c)."""


class MetricPositivityError(InvalidArgument):
    """The metric operator has a non-positive diagonal entry."""


class NoDipError(InvalidArgument):
    """The signal has no dips in time because the eigenvectors have fully coalesced."""


class DomainError(InvalidArgument):
    """Input lies outside the validity regime of an approximation."""


class DegenerateSignalError(InvalidArgument):
    """The binary-outcome Fisher information is singular (S is 0 or 1)."""


class NumericalError(PHSenseError, ArithmeticError):
    """A root bracket or search failed to converge."""


class InsufficientStatisticsError(PHSenseError):
    """A Monte Carlo repetition kept too few runs to form an estimate."""

    def __init__(self, message: str, repetition: int | None = None):
        super().__init__(message)
        self.repetition = repetition
