"""Perfect-information month benchmarks (Hol and Hol_init).

The whole realized path is scheduled as one LP with a single peak variable
priced at the measured-peak tariff.  With ``pin_daily`` every day starts and
ends at the initial conditions, exactly like the decoupled day problems;
without it, storage levels carry over between days and only the first and
last hour of the month are pinned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dayopt import H, DayInfeasibleError, DaySolution, DayVars, PolicyVariant, add_day_block, check_day_bands
from .lp import LE, LpBuilder, LpModel, Tolerances, solve_lp
from .model import BuildingConfig
from .scenario import ScenarioPath, ScenarioSet
from .sim import SimulationRecord, make_record


@dataclass
class MonthProblem:
    model: LpModel
    days: list[DayVars]
    peak: int
    pin_daily: bool

    @property
    def hours(self) -> int:
        return len(self.days) * H


def build_month_problem(
    cfg: BuildingConfig, sset: ScenarioSet, path: ScenarioPath, pin_daily: bool
) -> MonthProblem:
    if len(path) != sset.G:
        raise ValueError(f"path has {len(path)} days, scenario set {sset.G}")
    b = LpBuilder()
    days: list[DayVars] = []
    G = len(path)
    for g, s in enumerate(path.states):
        if g == 0 or pin_daily:
            start = None
        else:
            prev = days[-1]
            start = {
                "soc_ev": int(prev.soc_ev[-1]),
                "soc_b": int(prev.soc_b[-1]),
                "t_in": int(prev.t_in[-1]),
                "t_e": int(prev.t_e[-1]),
            }
        pin_end = pin_daily or g == G - 1
        days.append(add_day_block(b, cfg, sset[g, s], start=start, pin_end=pin_end, name=f"d{g + 1}_"))
    p = b.add_var(0.0, cfg.grid.p_imp_max, cfg.grid.peak_tariff, "peak")
    imp = np.concatenate([d.y_imp for d in days])
    n = imp.size
    b.add_rows(
        np.concatenate([np.arange(n), np.arange(n)]),
        np.concatenate([imp, np.full(n, p)]),
        np.concatenate([np.ones(n), -np.ones(n)]),
        LE,
        np.zeros(n),
        "peak",
    )
    return MonthProblem(b.build(), days, p, pin_daily)


def _diagnose(cfg, sset, path, pin_daily) -> str:
    for g, s in enumerate(path.states):
        problems = check_day_bands(cfg, sset[g, s], pin_end=pin_daily)
        if problems:
            return f"day {g + 1}: " + "; ".join(problems)
    return "storage/thermal dynamics cannot meet the pinned boundary values"


def solve_holistic(
    cfg: BuildingConfig,
    sset: ScenarioSet,
    path: ScenarioPath,
    pin_daily: bool,
    *,
    method: str = "highs",
    tol: Tolerances = Tolerances(),
) -> SimulationRecord:
    case = "Hol_init" if pin_daily else "Hol"
    mp = build_month_problem(cfg, sset, path, pin_daily)
    sol = solve_lp(mp.model, method=method, tol=tol)
    if not sol.optimal:
        raise DayInfeasibleError(f"{case} month problem {sol.status}: " + _diagnose(cfg, sset, path, pin_daily))
    x = sol.x
    gr = cfg.grid
    running = 0.0
    day_solutions = []
    for g, (s, dv) in enumerate(zip(path.states, mp.days)):
        sc = sset[g, s]
        y_imp = x[dv.y_imp]
        cost_import = float(y_imp @ ((gr.c_grid + sc.spot) * (1.0 + gr.vat)))
        cost_export = float(x[dv.y_exp] @ sc.spot)
        p0 = running
        running = max(running, float(y_imp.max()))
        day_solutions.append(
            DaySolution(
                y_imp=y_imp,
                y_exp=x[dv.y_exp],
                y_ev_ch=x[dv.y_ev],
                y_b_ch=x[dv.y_bch],
                y_b_dch=x[dv.y_bdch],
                q_sh=x[dv.q],
                soc_ev=x[dv.soc_ev],
                soc_b=x[dv.soc_b],
                t_in=x[dv.t_in],
                t_e=x[dv.t_e],
                peak=running,
                cost_import=cost_import,
                cost_export=cost_export,
                cost_future=0.0,
                objective=cost_import - cost_export,
                variant=PolicyVariant.NO_PEAK,
                p0=p0,
            )
        )
    rec = make_record(case, cfg, path, day_solutions)
    rec.objective = sol.objective
    return rec


def schedule_vector(mp: MonthProblem, days: list[DaySolution]) -> np.ndarray:
    """Place a day-by-day schedule into the month model's column space."""
    x = np.zeros(mp.model.n_vars)
    for dv, ds in zip(mp.days, days):
        x[dv.y_imp] = ds.y_imp
        x[dv.y_exp] = ds.y_exp
        x[dv.y_ev] = ds.y_ev_ch
        x[dv.y_bch] = ds.y_b_ch
        x[dv.y_bdch] = ds.y_b_dch
        x[dv.q] = ds.q_sh
        x[dv.soc_ev] = ds.soc_ev
        x[dv.soc_b] = ds.soc_b
        x[dv.t_in] = ds.t_in
        x[dv.t_e] = ds.t_e
    x[mp.peak] = max(float(np.max(ds.y_imp)) for ds in days)
    return x
