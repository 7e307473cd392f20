"""Two-phase primal simplex for bounded variables.

Every row gets a slack (``a.x + s = b``) whose bounds encode the row sense, so
the working form is ``A x = b, l <= x <= u``.  Nonbasic variables sit at a
finite bound (or at zero when free).  Phase 1 starts from an all-artificial
basis and minimizes the artificial sum.  The basis inverse is kept explicitly
and updated by elementary row operations, with a fresh inverse every
``REFACTOR`` pivots.

Pricing is Dantzig's largest reduced cost until ``10 * (rows + cols)``
iterations, then Bland's lowest-index rule, which cannot cycle.  The hard cap
is ``50 * (rows + cols)``.
"""

from __future__ import annotations

import numpy as np

from .model import EQ, GE, LE, LpModel, LpSolution, NumericalError, Tolerances

REFACTOR = 64
PIVOT_TOL = 1e-9

_AT_LOWER, _AT_UPPER, _FREE, _BASIC = 0, 1, 2, 3


class _Simplex:
    def __init__(self, A: np.ndarray, b: np.ndarray, lb: np.ndarray, ub: np.ndarray, tol: Tolerances):
        self.A = A
        self.b = b
        self.lb = lb
        self.ub = ub
        self.tol = tol
        m, n = A.shape
        self.m, self.n = m, n
        self.iterations = 0
        self.bland_after = 10 * (m + n)
        self.cap = 50 * (m + n)

    def start(self, x: np.ndarray, state: np.ndarray, basis: np.ndarray):
        self.x = x
        self.state = state
        self.basis = basis
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular basis") from exc
        nonbasic = self.state != _BASIC
        resid = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.Binv @ resid
        self.since_refactor = 0

    def run(self, c: np.ndarray) -> str:
        """Iterate to optimality for cost ``c``; returns "optimal" or "unbounded"."""
        tol = self.tol
        lb, ub = self.lb, self.ub
        movable = lb < ub
        while True:
            if self.iterations >= self.cap:
                raise NumericalError(
                    f"simplex iteration cap {self.cap} reached (ill-conditioned model?)"
                )
            y = c[self.basis] @ self.Binv
            d = c - y @ self.A
            scale = max(1.0, float(np.max(np.abs(c))))
            thr = tol.optimality * scale * 1e-3
            st = self.state
            inc = (st == _AT_LOWER) & (d < -thr)
            dec = (st == _AT_UPPER) & (d > thr)
            free = (st == _FREE) & (np.abs(d) > thr)
            cand = (inc | dec | free) & movable
            if not cand.any():
                return "optimal"
            idx = np.flatnonzero(cand)
            if self.iterations >= self.bland_after:
                q = int(idx[0])
            else:
                q = int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.Binv @ self.A[:, q]
            step = direction * alpha  # basic values move by -theta * step
            xb = self.x[self.basis]
            lbb, ubb = lb[self.basis], ub[self.basis]
            theta = ub[q] - lb[q]  # bound flip
            leave = -1
            with np.errstate(divide="ignore", invalid="ignore"):
                down = step > PIVOT_TOL
                up = step < -PIVOT_TOL
                ratios = np.full(self.m, np.inf)
                ratios[down] = (xb[down] - lbb[down]) / step[down]
                ratios[up] = (ubb[up] - xb[up]) / -step[up]
            ratios = np.maximum(ratios, 0.0)
            if ratios.size:
                rmin = ratios.min()
                if rmin < theta:
                    ties = np.flatnonzero(ratios <= rmin + 1e-12)
                    if self.iterations >= self.bland_after:
                        leave = int(ties[np.argmin(self.basis[ties])])
                    else:
                        leave = int(ties[np.argmax(np.abs(alpha[ties]))])
                    theta = rmin
            if not np.isfinite(theta):
                return "unbounded"

            self.iterations += 1
            self.x[q] += direction * theta
            self.x[self.basis] = xb - theta * step
            if leave < 0:
                self.state[q] = _AT_UPPER if direction > 0 else _AT_LOWER
                continue

            out = int(self.basis[leave])
            if step[leave] > 0:
                self.x[out] = lb[out]
                self.state[out] = _AT_LOWER if np.isfinite(lb[out]) else _FREE
            else:
                self.x[out] = ub[out]
                self.state[out] = _AT_UPPER if np.isfinite(ub[out]) else _FREE
            self.state[q] = _BASIC
            self.basis[leave] = q

            piv = alpha[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            self.since_refactor += 1
            if self.since_refactor >= REFACTOR:
                self.refactor()


def solve_simplex(model: LpModel, tol: Tolerances = Tolerances()) -> LpSolution:
    A0 = model.A.toarray()
    m, n = A0.shape
    b = model.rhs.astype(float)

    slack_lb = np.where(model.sense == GE, -np.inf, 0.0)
    slack_ub = np.where(model.sense == LE, np.inf, 0.0)
    lb = np.concatenate([model.lb, slack_lb])
    ub = np.concatenate([model.ub, slack_ub])
    A = np.hstack([A0, np.eye(m)])

    x = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    state = np.where(np.isfinite(lb), _AT_LOWER, np.where(np.isfinite(ub), _AT_UPPER, _FREE))
    resid = b - A @ x
    sign = np.where(resid >= 0, 1.0, -1.0)

    # artificials
    A_full = np.hstack([A, np.diag(sign)])
    lb_full = np.concatenate([lb, np.zeros(m)])
    ub_full = np.concatenate([ub, np.full(m, np.inf)])
    x_full = np.concatenate([x, np.abs(resid)])
    state_full = np.concatenate([state, np.full(m, _BASIC)])
    basis = np.arange(n + m, n + 2 * m)

    sx = _Simplex(A_full, b, lb_full, ub_full, tol)
    sx.start(x_full, state_full, basis)

    c1 = np.concatenate([np.zeros(n + m), np.ones(m)])
    sx.run(c1)
    infeas = float(np.sum(sx.x[n + m :]))
    if infeas > tol.feasibility * max(1.0, float(np.max(np.abs(b), initial=0.0))):
        return LpSolution(status="infeasible", iterations=sx.iterations, message=f"phase 1 residual {infeas:.3g}")

    # Pin artificials at zero; basic ones stay as degenerate placeholders.
    sx.ub[n + m :] = 0.0
    sx.x[n + m :] = np.where(sx.state[n + m :] == _BASIC, sx.x[n + m :], 0.0)
    sx.refactor()
    c2 = np.concatenate([model.c, np.zeros(2 * m)])
    status = sx.run(c2)
    if status == "unbounded":
        return LpSolution(status="unbounded", iterations=sx.iterations)

    xs = sx.x[:n].copy()
    # snap to bounds hit within tolerance
    xs = np.clip(xs, model.lb, model.ub)
    return LpSolution(
        status="optimal",
        objective=float(model.c @ xs + model.offset),
        x=xs,
        activities=model.A @ xs,
        iterations=sx.iterations,
    )


__all__ = ["solve_simplex", "EQ", "GE", "LE"]
