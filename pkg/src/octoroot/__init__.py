"""Eighth-order three-point root finders with convergence diagnostics and basin rendering."""

from .expr import Problem, builtin, parse
from .methods import ALL_METHODS, DEFAULT_PARAMS, MethodId, MethodParams, step
from .numerics import HARDWARE, BigComplex, PrecisionContext

__version__ = "0.1.0"

__all__ = [
    "ALL_METHODS",
    "DEFAULT_PARAMS",
    "HARDWARE",
    "BigComplex",
    "MethodId",
    "MethodParams",
    "PrecisionContext",
    "Problem",
    "builtin",
    "parse",
    "step",
]
