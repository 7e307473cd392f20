"""Branch-and-bound over SOS-2 sets on top of :func:`solve_lp`."""

from __future__ import annotations

import heapq
import itertools
from typing import Sequence

import numpy as np

from .model import LpModel, LpSolution, NumericalError, Sos2Set, Tolerances
from .solve import solve_lp

MAX_NODES = 100_000


def is_convex_curve(values: Sequence[float], grid, tol: float = 1e-9) -> bool:
    """True iff the slopes of the piecewise-linear curve never decrease (within ``tol``)."""
    pts = np.asarray(getattr(grid, "points", grid), dtype=float)
    v = np.asarray(values, dtype=float)
    if v.shape != pts.shape:
        raise ValueError(f"curve has {v.size} values for {pts.size} grid points")
    if v.size < 3:
        return True
    slopes = np.diff(v) / np.diff(pts)
    return bool(np.all(np.diff(slopes) >= -tol))


def sos2_violation(x: np.ndarray, s: Sos2Set, tol: float) -> bool:
    nz = np.flatnonzero(np.abs(x[list(s.indices)]) > tol)
    return nz.size > 0 and nz[-1] - nz[0] > 1


def _branch_point(vals: np.ndarray, weights: np.ndarray, lo: int, hi: int) -> int:
    w = vals[lo : hi + 1]
    total = w.sum()
    if total <= 0:
        r = (lo + hi) // 2
    else:
        center = float(w @ weights[lo : hi + 1]) / total
        # first member whose weight reaches the center
        r = lo + int(np.searchsorted(weights[lo : hi + 1], center, side="right")) - 1
    return min(max(r, lo + 1), hi - 1)


def solve_sos2(
    m: LpModel,
    sets: Sequence[Sos2Set],
    *,
    method: str = "highs",
    tol: Tolerances = Tolerances(),
    max_nodes: int = MAX_NODES,
) -> LpSolution:
    """Minimize ``m`` with every set in ``sets`` restricted to two adjacent nonzeros.

    Best-bound search.  A node restricts each set to a contiguous window of
    members; a violated set is split at its weighted center ``r`` into windows
    ``[lo, r]`` and ``[r, hi]``, which share ``r`` so that the segment on
    either side of it stays reachable.
    """
    m.check()
    for s in sets:
        if max(s.indices) >= m.n_vars or min(s.indices) < 0:
            raise ValueError("SOS-2 member index out of range")
    if not sets:
        return solve_lp(m, method=method, tol=tol)

    members = [np.asarray(s.indices) for s in sets]
    weights = [s.weight_array for s in sets]
    counter = itertools.count()

    def node_model(windows):
        ub = m.ub.copy()
        for idx, (lo, hi) in zip(members, windows):
            ub[idx[:lo]] = 0.0
            ub[idx[hi + 1 :]] = 0.0
        return m.with_bounds(ub=ub)

    root_windows = tuple((0, len(s) - 1) for s in sets)
    root = solve_lp(node_model(root_windows), method=method, tol=tol)
    if not root.optimal:
        return root

    incumbent: LpSolution | None = None
    heap = [(root.objective, next(counter), root_windows, root)]
    explored = 1
    total_iters = root.iterations

    while heap:
        bound, _, windows, sol = heapq.heappop(heap)
        if incumbent is not None:
            gap = tol.optimality * max(1.0, abs(incumbent.objective))
            if bound >= incumbent.objective - gap:
                continue
        violated = [k for k, s in enumerate(sets) if sos2_violation(sol.x, s, tol.feasibility)]
        if not violated:
            incumbent = sol
            continue
        k = violated[0]
        lo, hi = windows[k]
        vals = np.abs(sol.x[members[k]])
        r = _branch_point(vals, weights[k], lo, hi)
        for child in ((lo, r), (r, hi)):
            w = list(windows)
            w[k] = child
            w = tuple(w)
            if explored >= max_nodes:
                raise NumericalError(f"SOS-2 search exceeded {max_nodes} nodes")
            res = solve_lp(node_model(w), method=method, tol=tol)
            explored += 1
            total_iters += res.iterations
            if res.status == "unbounded":
                res.nodes = explored
                return res
            if res.optimal:
                heapq.heappush(heap, (res.objective, next(counter), w, res))

    if incumbent is None:
        return LpSolution(status="infeasible", nodes=explored, iterations=total_iters,
                          message="no branch admits an SOS-2 feasible point")
    incumbent.nodes = explored
    incumbent.iterations = total_iters
    return incumbent
