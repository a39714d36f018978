"""Numerics for Selberg and Ruelle zeta functions on Hilbert modular
surfaces over real quadratic fields of class number one."""

__version__ = "0.1.0"

from .errors import (BudgetExceededError, HilbertSelbergError,
                     InvariantViolation, ValidationError)
from .quadfield import FieldCtx, QuadInt, make_field

__all__ = [
    "BudgetExceededError",
    "FieldCtx",
    "HilbertSelbergError",
    "InvariantViolation",
    "QuadInt",
    "ValidationError",
    "make_field",
    "__version__",
]
