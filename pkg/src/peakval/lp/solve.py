from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .model import EQ, GE, LE, LpModel, LpSolution, NumericalError, Tolerances
from .simplex import solve_simplex

METHODS = ("highs", "simplex")


def _solve_highs(m: LpModel, tol: Tolerances) -> LpSolution:
    le = m.sense == LE
    ge = m.sense == GE
    eq = m.sense == EQ
    A_ub = A_eq = b_ub = b_eq = None
    if le.any() or ge.any():
        ineq = le | ge
        flip = np.where(ge[ineq], -1.0, 1.0)
        A_ub = m.A[ineq].multiply(flip[:, None]).tocsr()
        b_ub = m.rhs[ineq] * flip
    if eq.any():
        A_eq = m.A[eq]
        b_eq = m.rhs[eq]
    bounds = np.column_stack([m.lb, m.ub])
    res = linprog(
        m.c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
        options={
            "primal_feasibility_tolerance": tol.feasibility,
            "dual_feasibility_tolerance": tol.feasibility,
            "presolve": True,
        },
    )
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 0:
        x = np.clip(res.x, m.lb, m.ub)
        return LpSolution(
            status="optimal",
            objective=float(m.c @ x + m.offset),
            x=x,
            activities=m.A @ x,
            iterations=iters,
        )
    if res.status == 2:
        return LpSolution(status="infeasible", iterations=iters, message=res.message)
    if res.status == 3:
        return LpSolution(status="unbounded", iterations=iters, message=res.message)
    raise NumericalError(f"HiGHS stopped with status {res.status}: {res.message}")


def solve_lp(m: LpModel, *, method: str = "highs", tol: Tolerances = Tolerances()) -> LpSolution:
    """Minimize a bounded-variable LP.

    ``method="simplex"`` uses the in-package two-phase bounded simplex;
    ``"highs"`` (default) hands the same model to HiGHS through scipy.
    Both return statuses ``optimal``, ``infeasible`` or ``unbounded`` and raise
    :class:`NumericalError` otherwise.
    """
    m.check()
    if method == "highs":
        return _solve_highs(m, tol)
    if method == "simplex":
        return solve_simplex(m, tol)
    raise ValueError(f"unknown LP method {method!r}; expected one of {METHODS}")
