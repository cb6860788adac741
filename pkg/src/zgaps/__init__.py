"""Numerical tools for large and small gaps between zeros of Hardy's Z-function and its derivatives."""

from .errors import (
    BracketError,
    BudgetError,
    DomainError,
    GridTooCoarseWarning,
    IndeterminateRatioError,
    InsufficientDataError,
    InvalidMollifierError,
    NumericalConsistencyError,
    ToleranceNotMetError,
    UnsupportedOrderError,
    ZGapsError,
)
from .polynomial import Polynomial
from .rqmc import MomentEstimate, QuadratureBudget

__all__ = [
    "BracketError",
    "BudgetError",
    "DomainError",
    "GridTooCoarseWarning",
    "IndeterminateRatioError",
    "InsufficientDataError",
    "InvalidMollifierError",
    "MomentEstimate",
    "NumericalConsistencyError",
    "Polynomial",
    "QuadratureBudget",
    "ToleranceNotMetError",
    "UnsupportedOrderError",
    "ZGapsError",
]
