"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each class carries one.
"""

from __future__ import annotations


class ZGapsError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(ZGapsError, ValueError):
    """An argument lies outside the certified range of an evaluator."""

    exit_code = 2


class UnsupportedOrderError(DomainError):
    """Requested derivative order is above the supported maximum."""


class BudgetError(DomainError):
    """Quadrature budget is infeasible (too few points or replicates)."""


class BracketError(DomainError):
    """A root-search bracket does not straddle the target."""


class InvalidMollifierError(DomainError):
    """Mollifier polynomial violates P(0) = 0."""


class InsufficientDataError(ZGapsError, ValueError):
    """Too few zeros to form the requested statistic."""

    exit_code = 3


class NumericalConsistencyError(ZGapsError, ArithmeticError):
    """A computed quantity failed an internal consistency check."""

    exit_code = 3


class IndeterminateRatioError(NumericalConsistencyError):
    """Denominator confidence interval contains zero."""


class ToleranceNotMetError(ZGapsError):
    """Requested accuracy is not reachable with the given parameters.

    ``achieved`` carries the best bound that was obtained.
    """

    exit_code = 4

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class GridTooCoarseWarning(UserWarning):
    """A scan cell probably hides a pair of zeros."""
