"""Backward stochastic dynamic programming over the achieved peak.

For each day ``g`` (last to first), scenario ``s`` and incoming peak ``P_n``
the day problem is solved with the expected future cost curve
``F[g][s] = sum_s' rho_g(s'|s) * V[g+1][s']`` (the tariff line on the last
day).  Its optimal objective becomes ``V[g][s][n]``.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dayopt import DayInfeasibleError, DayScenario, DayState, PolicyVariant, solve_day
from .lp import Tolerances
from .model import BuildingConfig, PeakGrid
from .scenario import MarkovChain, ScenarioSet

log = logging.getLogger(__name__)

SLOPE_TOL = 1e-6
MONOTONE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CostCurve:
    grid: PeakGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise ValueError(f"curve has {v.size} values for {len(self.grid)} grid points")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __call__(self, p: float) -> float:
        return float(np.interp(p, self.grid.array, self.values))

    def errors(self, peak_tariff: float) -> list[str]:
        slopes = marginal_curve(self)
        errs = []
        if np.any(slopes < -MONOTONE_TOL):
            errs.append(f"curve decreases (min slope {slopes.min():.3g})")
        if np.any(slopes > peak_tariff + SLOPE_TOL):
            errs.append(f"curve slope {slopes.max():.9g} exceeds the peak tariff {peak_tariff}")
        return errs


def terminal_curve(grid: PeakGrid, tariff: float) -> CostCurve:
    return CostCurve(grid, tariff * grid.array)


def marginal_curve(c: CostCurve) -> np.ndarray:
    """Slope of each segment, EUR per kWh/h."""
    return np.diff(c.values) / np.diff(c.grid.array)


def optimal_initial_peak(c: CostCurve, tol: float = 1e-6) -> float:
    """Highest grid peak whose cost still equals the cost at zero."""
    flat = np.flatnonzero(np.abs(c.values - c.values[0]) <= tol)
    # only the leading run counts
    run = flat[: np.searchsorted(flat - np.arange(flat.size), 1)]
    return float(c.grid.points[int(run[-1])])


@dataclass(eq=False)
class ValueTable:
    grid: PeakGrid
    V: np.ndarray  # (G, N_S, N_P)
    F: np.ndarray  # (G, N_S, N_P): curve used by day g under scenario s
    nodes: int = 0
    seconds: float = 0.0

    @property
    def G(self) -> int:
        return self.V.shape[0]

    @property
    def N_S(self) -> int:
        return self.V.shape[1]

    def curve(self, g: int, s: int) -> CostCurve:
        return CostCurve(self.grid, self.F[g, s])

    def value_curve(self, g: int, s: int) -> CostCurve:
        return CostCurve(self.grid, self.V[g, s])


class CurveInvariantError(RuntimeError):
    pass


def expected_curves(V_next: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``F[s] = sum_s' rho[s, s'] * V_next[s']`` pointwise over the grid."""
    return rho @ V_next


def _solve_node(args):
    cfg, sc, p0, grid, values, method, tol, ident = args
    curve = CostCurve(grid, values)
    sol = solve_day(cfg, sc, DayState(p0), curve, PolicyVariant.SDP, method=method, tol=tol, scenario_id=ident)
    return sol.objective


def backward_pass(
    cfg: BuildingConfig,
    sset: ScenarioSet,
    chain: MarkovChain,
    grid: PeakGrid,
    *,
    method: str = "highs",
    tol: Tolerances = Tolerances(),
    workers: int = 1,
    check: bool = True,
) -> ValueTable:
    """Compute ``V`` and ``F`` for every day, scenario and grid point.

    Days are processed last to first; within a day all (scenario, grid
    point) solves are independent and are spread over ``workers`` processes.
    """
    G, N_S, N_P = sset.G, sset.N_S, len(grid)
    if chain.transitions.shape[0] < G - 1:
        raise ValueError(f"chain covers {chain.transitions.shape[0] + 1} days, scenarios {G}")
    V = np.empty((G, N_S, N_P))
    F = np.empty((G, N_S, N_P))
    terminal = terminal_curve(grid, cfg.grid.peak_tariff).values
    pts = grid.array
    nodes = 0
    t0 = time.perf_counter()
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for g in range(G - 1, -1, -1):
            if g == G - 1:
                F[g] = terminal
            else:
                F[g] = expected_curves(V[g + 1], chain.transitions[g])
            if check:
                for s in range(N_S):
                    errs = CostCurve(grid, F[g, s]).errors(cfg.grid.peak_tariff)
                    if errs:
                        raise CurveInvariantError(f"F[g={g + 1}][s={s + 1}]: " + "; ".join(errs))
            tasks = [
                (cfg, sset[g, s], float(pts[n]), grid, F[g, s], method, tol, (g + 1, s + 1, n + 1))
                for s in range(N_S)
                for n in range(N_P)
            ]
            try:
                if pool is None:
                    results = [_solve_node(t) for t in tasks]
                else:
                    results = list(pool.map(_solve_node, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
            except DayInfeasibleError as exc:
                raise DayInfeasibleError(exc.reason, exc.scenario_id) from None
            V[g] = np.asarray(results).reshape(N_S, N_P)
            nodes += len(tasks)
            log.debug("day %d done, %d nodes so far", g + 1, nodes)
    finally:
        if pool is not None:
            pool.shutdown()
    return ValueTable(grid, V, F, nodes=nodes, seconds=time.perf_counter() - t0)


# --- efcc.json -------------------------------------------------------------


def table_to_dict(table: ValueTable) -> dict:
    return {
        "grid": list(table.grid.points),
        "days": [
            {
                "g": g + 1,
                "scenarios": [
                    {"s": s + 1, "V": table.V[g, s].tolist(), "F": table.F[g, s].tolist()}
                    for s in range(table.N_S)
                ],
            }
            for g in range(table.G)
        ],
    }


def table_from_dict(data: dict) -> ValueTable:
    grid = PeakGrid(tuple(float(p) for p in data["grid"]))
    days = sorted(data["days"], key=lambda d: d["g"])
    G = len(days)
    N_S = len(days[0]["scenarios"])
    V = np.empty((G, N_S, len(grid)))
    F = np.empty_like(V)
    for g, day in enumerate(days):
        for sc in sorted(day["scenarios"], key=lambda x: x["s"]):
            V[g, sc["s"] - 1] = sc["V"]
            F[g, sc["s"] - 1] = sc["F"]
    return ValueTable(grid, V, F)


def save_table(table: ValueTable, path: str | Path) -> None:
    Path(path).write_text(json.dumps(table_to_dict(table)) + "\n")


def load_table(path: str | Path) -> ValueTable:
    return table_from_dict(json.loads(Path(path).read_text()))
