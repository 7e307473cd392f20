"""Forward Monte-Carlo evaluation of the operating policies.

Every replication draws one scenario path from a seed derived from the master
seed and the replication index, and all cases of that replication run on the
same path.  Realized cost is the month's energy cost plus the tariff on the
final measured peak; curve values never enter it.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .dayopt import DayInfeasibleError, DaySolution, DayState, PolicyVariant, solve_day
from .lp import Tolerances
from .model import BuildingConfig
from .scenario import MarkovChain, ScenarioPath, ScenarioSet, sample_path

POLICY_CASES = {"SDP": PolicyVariant.SDP, "NoPeak": PolicyVariant.NO_PEAK, "MinPeak": PolicyVariant.MIN_PEAK}
HOLISTIC_CASES = ("Hol", "Hol_init")
ALL_CASES = ("SDP", "NoPeak", "MinPeak", "Hol", "Hol_init")


@dataclass
class SimulationRecord:
    case: str
    path: ScenarioPath
    days: list[DaySolution]
    final_peak: float
    energy_cost: float
    tariff_cost: float
    total_cost: float
    seed: int | None = None
    rep: int | None = None
    objective: float | None = None  # month LP objective, holistic cases only


@dataclass
class CaseSummary:
    case: str
    n: int
    mean_cost: float
    sd_cost: float
    mean_peak: float


def make_record(case: str, cfg: BuildingConfig, path: ScenarioPath, days: list[DaySolution],
                seed=None, rep=None) -> SimulationRecord:
    final_peak = max(d.peak for d in days)
    energy = float(sum(d.energy_cost for d in days))
    tariff = cfg.grid.peak_tariff * final_peak
    return SimulationRecord(case, path, days, final_peak, energy, tariff, energy + tariff, seed, rep)


def derive_seed(master_seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([master_seed, rep]).generate_state(1, np.uint32)[0])


def normalize_cases(cases: str | Iterable[str]) -> list[str]:
    if isinstance(cases, str):
        cases = [c.strip() for c in cases.split(",") if c.strip()]
    out: list[str] = []
    for c in cases:
        if c == "all":
            out.extend(x for x in ALL_CASES if x not in out)
        elif c in ALL_CASES:
            if c not in out:
                out.append(c)
        else:
            raise ValueError(f"unknown case {c!r}; choose from {', '.join(ALL_CASES)} or 'all'")
    if not out:
        raise ValueError("no cases selected")
    return out


class DayCache:
    """Memo of day solutions keyed by (variant, day, scenario, incoming peak).

    NoPeak schedules do not depend on the incoming peak, so they are keyed
    without it and only the reported peak is adjusted.
    """

    def __init__(self):
        self._store: dict = {}

    def get(self, cfg, sset, table, variant, g, s, p0, method, tol) -> DaySolution:
        if variant is PolicyVariant.NO_PEAK:
            key = (variant, g, s)
            sol = self._store.get(key)
            if sol is None:
                sol = solve_day(cfg, sset[g, s], DayState(0.0), None, variant, method=method, tol=tol,
                                scenario_id=(g + 1, s + 1))
                self._store[key] = sol
            return replace(sol, peak=max(p0, sol.peak), p0=p0)
        key = (variant, g, s, p0)
        sol = self._store.get(key)
        if sol is None:
            curve = table.curve(g, s) if variant is PolicyVariant.SDP else None
            sol = solve_day(cfg, sset[g, s], DayState(p0), curve, variant, method=method, tol=tol,
                            scenario_id=(g + 1, s + 1))
            self._store[key] = sol
        return sol


def run_path(cfg, sset, table, variant: PolicyVariant, path: ScenarioPath, *, method="highs",
             tol=Tolerances(), cache: DayCache | None = None) -> list[DaySolution]:
    cache = DayCache() if cache is None else cache
    running = 0.0  # fresh billing month
    days = []
    for g, s in enumerate(path.states):
        sol = cache.get(cfg, sset, table, variant, g, s, running, method, tol)
        running = sol.peak
        days.append(sol)
    return days


def run_replication(
    cfg: BuildingConfig,
    sset: ScenarioSet,
    chain: MarkovChain,
    table,
    variant: PolicyVariant | str,
    seed: int,
    *,
    method: str = "highs",
    tol: Tolerances = Tolerances(),
    cache: DayCache | None = None,
    rep: int | None = None,
) -> SimulationRecord:
    variant = PolicyVariant(variant)
    if (variant is PolicyVariant.SDP) != (table is not None):
        raise ValueError("a value table is required for the SDP variant and only for it")
    path = sample_path(chain, seed, sset.G)
    days = run_path(cfg, sset, table, variant, path, method=method, tol=tol, cache=cache)
    label = {v: k for k, v in POLICY_CASES.items()}[variant]
    return make_record(label, cfg, path, days, seed=seed, rep=rep)


def _run_rep(args) -> list[SimulationRecord]:
    from .holistic import solve_holistic

    cfg, sset, chain, table, cases, rep, master_seed, method, tol, cache = args
    seed = derive_seed(master_seed, rep)
    path = sample_path(chain, seed, sset.G)
    out = []
    for case in cases:
        try:
            if case in POLICY_CASES:
                variant = POLICY_CASES[case]
                days = run_path(cfg, sset, table if variant is PolicyVariant.SDP else None, variant, path,
                                method=method, tol=tol, cache=cache)
                rec = make_record(case, cfg, path, days, seed=seed, rep=rep)
            else:
                rec = solve_holistic(cfg, sset, path, pin_daily=(case == "Hol_init"), method=method, tol=tol)
                rec.seed, rec.rep = seed, rep
        except DayInfeasibleError as exc:
            raise DayInfeasibleError(f"replication {rep} case {case}: {exc.reason}", exc.scenario_id) from None
        out.append(rec)
    return out


_WORKER_CACHE: DayCache | None = None


def _run_rep_worker(args):
    global _WORKER_CACHE
    if _WORKER_CACHE is None:
        _WORKER_CACHE = DayCache()
    return _run_rep((*args, _WORKER_CACHE))


def summarize(records: Sequence[SimulationRecord], cases: Sequence[str]) -> list[CaseSummary]:
    out = []
    for case in cases:
        costs = [r.total_cost for r in records if r.case == case]
        peaks = [r.final_peak for r in records if r.case == case]
        if not costs:
            continue
        sd = statistics.stdev(costs) if len(costs) > 1 else 0.0
        out.append(CaseSummary(case, len(costs), statistics.fmean(costs), sd, statistics.fmean(peaks)))
    return out


def run_monte_carlo(
    cfg: BuildingConfig,
    sset: ScenarioSet,
    chain: MarkovChain,
    table,
    cases: str | Iterable[str],
    n_reps: int,
    master_seed: int,
    *,
    method: str = "highs",
    tol: Tolerances = Tolerances(),
    workers: int = 1,
) -> tuple[list[CaseSummary], list[SimulationRecord]]:
    """Run ``n_reps`` common-random-number replications of every case.

    Records come back ordered by case, then replication index.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    cases = normalize_cases(cases)
    if "SDP" in cases and table is None:
        raise ValueError("case SDP needs a value table")
    if workers > 1:
        tasks = [(cfg, sset, chain, table, cases, r, master_seed, method, tol) for r in range(n_reps)]
        with ProcessPoolExecutor(workers) as pool:
            per_rep = list(pool.map(_run_rep_worker, tasks, chunksize=max(1, n_reps // (4 * workers))))
    else:
        cache = DayCache()
        per_rep = [_run_rep((cfg, sset, chain, table, cases, r, master_seed, method, tol, cache))
                   for r in range(n_reps)]
    records = [rec for case in cases for reps in per_rep for rec in reps if rec.case == case]
    return summarize(records, cases), records


# --- CSV -----------------------------------------------------------------

RESULT_COLUMNS = ["case", "seed", "rep", "total_cost_eur", "energy_cost_eur", "tariff_cost_eur",
                  "final_peak_kwh_h", "path"]
SUMMARY_COLUMNS = ["case", "n", "mean_cost", "sd_cost", "mean_peak"]


def _meta_line() -> str:
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return f"# peakval {__version__} generated {stamp}\n"


def results_csv(records: Sequence[SimulationRecord], meta: bool = True) -> str:
    buf = io.StringIO()
    if meta:
        buf.write(_meta_line())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in records:
        w.writerow([
            r.case, r.seed, r.rep,
            f"{r.total_cost:.4f}", f"{r.energy_cost:.4f}", f"{r.tariff_cost:.4f}",
            f"{r.final_peak:.3f}", r.path.label(),
        ])
    return buf.getvalue()


def summary_csv(summaries: Sequence[CaseSummary], meta: bool = True) -> str:
    buf = io.StringIO()
    if meta:
        buf.write(_meta_line())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in summaries:
        w.writerow([s.case, s.n, f"{s.mean_cost:.4f}", f"{s.sd_cost:.4f}", f"{s.mean_peak:.3f}"])
    return buf.getvalue()


def write_results(records, summaries, out_dir: str | Path, meta: bool = True) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rp, sp_ = out / "results.csv", out / "summary.csv"
    rp.write_text(results_csv(records, meta))
    sp_.write_text(summary_csv(summaries, meta))
    return rp, sp_
