"""Bounded-variable LP and SOS-2 branch-and-bound."""

from .lpfile import read_lp, write_lp
from .model import (
    EQ,
    GE,
    LE,
    LpBuilder,
    LpError,
    LpModel,
    LpSolution,
    NumericalError,
    Sos2Set,
    Tolerances,
)
from .solve import METHODS, solve_lp
from .sos2 import is_convex_curve, solve_sos2, sos2_violation

__all__ = [
    "EQ",
    "GE",
    "LE",
    "LpBuilder",
    "LpError",
    "LpModel",
    "LpSolution",
    "METHODS",
    "NumericalError",
    "Sos2Set",
    "Tolerances",
    "is_convex_curve",
    "read_lp",
    "solve_lp",
    "solve_sos2",
    "sos2_violation",
    "write_lp",
]
