"""One-day operating problem: import/export, EV, battery and space heating.

The same constraint block is reused by the month-long benchmark in
:mod:`peakval.holistic`, which chains several blocks together.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .lp import EQ, LE, LpBuilder, LpError, LpModel, Sos2Set, Tolerances, is_convex_curve
from .lp import solve_lp, solve_sos2
from .model import HOURS_PER_DAY, BuildingConfig

H = HOURS_PER_DAY
MINPEAK_SLACK = 1e-6


class PolicyVariant(str, enum.Enum):
    SDP = "SDP"  # expected future cost curve on the achieved peak
    NO_PEAK = "NoPeak"  # peak ignored
    MIN_PEAK = "MinPeak"  # lowest peak first, then cheapest schedule


class DayInfeasibleError(LpError):
    def __init__(self, reason: str, scenario_id=None):
        self.reason = reason
        self.scenario_id = scenario_id
        where = f" (scenario {scenario_id})" if scenario_id is not None else ""
        super().__init__(f"day problem infeasible{where}: {reason}")


def _series(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != (H,):
        raise ValueError(f"{name} must have {H} hourly values, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DayScenario:
    """One realized day.  ``pv`` is AC-side production (inverter losses applied)."""

    spot: np.ndarray
    load: np.ndarray
    ev_avail: np.ndarray
    pv: np.ndarray
    occupancy: np.ndarray
    t_out: np.ndarray

    def __post_init__(self):
        for name in ("spot", "load", "ev_avail", "pv", "occupancy", "t_out"):
            object.__setattr__(self, name, _series(getattr(self, name), name))
        if np.any(self.load < 0) or np.any(self.pv < 0):
            raise ValueError("load and pv must be non-negative")
        for name in ("ev_avail", "occupancy"):
            if not np.all(np.isin(getattr(self, name), (0.0, 1.0))):
                raise ValueError(f"{name} flags must be 0 or 1")

    @property
    def departure_hours(self) -> np.ndarray:
        """Hours where the EV is present and gone the next hour (last hour excluded)."""
        a = self.ev_avail
        return np.flatnonzero((a[:-1] == 1) & (a[1:] == 0))


@dataclass(frozen=True)
class DayState:
    p0: float


@dataclass
class DaySolution:
    y_imp: np.ndarray
    y_exp: np.ndarray
    y_ev_ch: np.ndarray
    y_b_ch: np.ndarray
    y_b_dch: np.ndarray
    q_sh: np.ndarray
    soc_ev: np.ndarray
    soc_b: np.ndarray
    t_in: np.ndarray
    t_e: np.ndarray
    peak: float
    cost_import: float
    cost_export: float
    cost_future: float
    objective: float
    variant: PolicyVariant = PolicyVariant.SDP
    lp_nodes: int = 1
    p0: float = 0.0

    @property
    def energy_cost(self) -> float:
        return self.cost_import - self.cost_export


@dataclass
class DayVars:
    """Column indices of one day block."""

    y_imp: np.ndarray
    y_exp: np.ndarray
    y_ev: np.ndarray
    y_bch: np.ndarray
    y_bdch: np.ndarray
    q: np.ndarray
    soc_ev: np.ndarray
    soc_b: np.ndarray
    t_in: np.ndarray
    t_e: np.ndarray
    peak: int | None = None
    gamma: np.ndarray | None = None
    sos: list[Sos2Set] = field(default_factory=list)


def thermal_coefficients(cfg: BuildingConfig) -> tuple[float, float, float]:
    """Hourly exchange rates (interior<-envelope, envelope<-interior, envelope<-outdoor)."""
    th = cfg.thermal
    a_i = 1.0 / (th.r_ie * th.c_i)
    a_e = 1.0 / (th.r_ie * th.c_e)
    a_o = 1.0 / (th.r_eo * (th.c_i if th.outdoor_term_uses_interior_capacity else th.c_e))
    return a_i, a_e, a_o


def thermal_trajectory(cfg: BuildingConfig, q_sh, t_out, t_in0: float, t_e0: float):
    """Forward-simulate the 2R2C recursions for a given heating schedule."""
    a_i, a_e, a_o = thermal_coefficients(cfg)
    q_sh = np.asarray(q_sh, float)
    t_out = np.asarray(t_out, float)
    t_in = np.empty_like(q_sh)
    t_e = np.empty_like(q_sh)
    prev_in, prev_e = t_in0, t_e0
    for h in range(q_sh.size):
        out_prev = t_out[h - 1] if h > 0 else t_out[0]
        t_in[h] = prev_in + a_i * (prev_e - prev_in) + q_sh[h] / cfg.thermal.c_i
        t_e[h] = prev_e + a_e * (prev_in - prev_e) + a_o * (out_prev - prev_e)
        prev_in, prev_e = t_in[h], t_e[h]
    return t_in, t_e


def interior_bounds(cfg: BuildingConfig, occupancy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    occ_lo, occ_hi = cfg.thermal.t_in_bounds_occupied
    away_lo, away_hi = cfg.thermal.t_in_bounds_away
    occ = occupancy == 1
    return np.where(occ, occ_lo, away_lo), np.where(occ, occ_hi, away_hi)


def ev_bounds(cfg: BuildingConfig, sc: DayScenario) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = cfg.ev.soc_bounds_connected
    lower = np.full(H, lo)
    lower[sc.departure_hours] = max(lo, cfg.ev.soc_min_departure)
    return lower, np.full(H, hi)


def check_day_bands(cfg: BuildingConfig, sc: DayScenario, soc_ev_start: float | None = None,
                    pin_end: bool = True) -> list[str]:
    """Cheap reachability checks that name the failing constraint family."""
    problems = []
    ev = cfg.ev
    lower, upper = ev_bounds(cfg, sc)
    reach = cfg.init.soc_ev0 if soc_ev_start is None else soc_ev_start
    for h in range(H):
        if sc.ev_avail[h] == 1:
            reach = min(upper[h], reach + ev.eta_ch * ev.p_ch_max)
        else:
            reach = reach - ev.d_away
        if reach < lower[h] - 1e-9:
            what = "departure SoC" if h in set(sc.departure_hours) else "EV minimum SoC"
            problems.append(f"{what} unreachable at hour {h + 1} (best {reach:.3f} < {lower[h]:.3f} kWh)")
            break
    if pin_end:
        t_lo, t_hi = interior_bounds(cfg, sc.occupancy)
        if not t_lo[-1] <= cfg.init.t_in0 <= t_hi[-1]:
            problems.append("end-of-day interior temperature pin outside the comfort band")
        if not upper[-1] >= cfg.init.soc_ev0 >= lower[-1]:
            problems.append("end-of-day EV SoC pin outside the EV band")
    return problems


def add_day_block(
    b: LpBuilder,
    cfg: BuildingConfig,
    sc: DayScenario,
    start: dict | None = None,
    pin_end: bool = True,
    name: str = "",
) -> DayVars:
    """Add the hourly variables and constraints of one day to ``b``.

    ``start`` maps ``soc_ev``, ``soc_b``, ``t_in``, ``t_e`` to either a constant
    (initial condition) or a column index of the previous hour's variable.
    Defaults to the configured initial conditions.  Energy costs go straight
    into the objective.
    """
    ev, bat, gr, th, ini = cfg.ev, cfg.battery, cfg.grid, cfg.thermal, cfg.init
    if start is None:
        start = {"soc_ev": ini.soc_ev0, "soc_b": ini.soc_b0, "t_in": ini.t_in0, "t_e": ini.t_e0}
    present = sc.ev_avail == 1
    imp_price = (gr.c_grid + sc.spot) * (1.0 + gr.vat)

    y_imp = b.add_vars(H, 0.0, gr.p_imp_max, imp_price, f"{name}y_imp")
    y_exp = b.add_vars(H, 0.0, gr.export_cap, -sc.spot, f"{name}y_exp")
    y_ev = b.add_vars(H, 0.0, np.where(present, ev.p_ch_max, 0.0), 0.0, f"{name}y_ev_ch")
    y_bch = b.add_vars(H, 0.0, bat.p_ch_max, 0.0, f"{name}y_b_ch")
    y_bdch = b.add_vars(H, 0.0, bat.p_dch_max, 0.0, f"{name}y_b_dch")
    q = b.add_vars(H, 0.0, th.q_sh_max, 0.0, f"{name}q_sh")
    ev_lo, ev_hi = ev_bounds(cfg, sc)
    t_lo, t_hi = interior_bounds(cfg, sc.occupancy)
    b_lo = np.full(H, bat.soc_bounds[0])
    b_hi = np.full(H, bat.soc_bounds[1])
    te_lo = np.full(H, -np.inf)
    te_hi = np.full(H, np.inf)
    if pin_end:
        for lo, hi, val in (
            (ev_lo, ev_hi, ini.soc_ev0),
            (b_lo, b_hi, ini.soc_b0),
            (t_lo, t_hi, ini.t_in0),
            (te_lo, te_hi, ini.t_e0),
        ):
            if not lo[-1] - 1e-12 <= val <= hi[-1] + 1e-12:
                raise DayInfeasibleError("end-of-day pin lies outside its band")
            lo[-1] = hi[-1] = val
    soc_ev = b.add_vars(H, ev_lo, ev_hi, 0.0, f"{name}soc_ev")
    soc_b = b.add_vars(H, b_lo, b_hi, 0.0, f"{name}soc_b")
    t_in = b.add_vars(H, t_lo, t_hi, 0.0, f"{name}t_in")
    t_e = b.add_vars(H, te_lo, te_hi, 0.0, f"{name}t_e")

    hours = np.arange(H)
    ones = np.ones(H)

    # electric balance
    b.add_rows(
        np.tile(hours, 6),
        np.concatenate([y_imp, y_exp, y_bdch, y_ev, q, y_bch]),
        np.concatenate([ones, -ones, ones, -ones, -ones, -ones]),
        EQ,
        sc.load - sc.pv,
        f"{name}balance",
    )

    def recursion(cur, coupled, rhs):
        """cur[h] + sum(coef * var[h]) + sum(prevcoef * prev[h-1]) = rhs[h]."""
        rows, cols, vals = [hours], [cur], [ones]
        rhs = np.array(rhs, dtype=float)
        for var, coef in coupled:
            rows.append(hours)
            cols.append(var)
            vals.append(np.broadcast_to(coef, (H,)).astype(float))
        return rows, cols, vals, rhs

    def lagged(rows, cols, vals, rhs, prev_var, prev_start, coef):
        """Add ``coef * prev[h-1]``; hour 0 uses ``prev_start`` (constant or column)."""
        rows.append(hours[1:])
        cols.append(prev_var[:-1])
        vals.append(np.full(H - 1, coef))
        if isinstance(prev_start, (int, np.integer)):
            rows.append(np.array([0]))
            cols.append(np.array([prev_start]))
            vals.append(np.array([coef]))
        else:
            rhs[0] -= coef * float(prev_start)

    def emit(rows, cols, vals, rhs, label):
        b.add_rows(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), EQ, rhs, f"{name}{label}")

    # EV: soc[h] - soc[h-1] - eta * y_ev[h] = -d_away * (1 - present)
    r = recursion(soc_ev, [(y_ev, -ev.eta_ch)], -ev.d_away * (1.0 - sc.ev_avail))
    lagged(*r, soc_ev, start["soc_ev"], -1.0)
    emit(*r, "ev")

    # battery: soc[h] - soc[h-1] - eta_ch y_ch + y_dch / eta_dch = 0
    r = recursion(soc_b, [(y_bch, -bat.eta_ch), (y_bdch, 1.0 / bat.eta_dch)], np.zeros(H))
    lagged(*r, soc_b, start["soc_b"], -1.0)
    emit(*r, "bat")

    a_i, a_e, a_o = thermal_coefficients(cfg)
    # interior: t_in[h] - (1 - a_i) t_in[h-1] - a_i t_e[h-1] - q[h] / c_i = 0
    r = recursion(t_in, [(q, -1.0 / th.c_i)], np.zeros(H))
    lagged(*r, t_in, start["t_in"], -(1.0 - a_i))
    lagged(*r, t_e, start["t_e"], -a_i)
    emit(*r, "tin")

    # envelope: t_e[h] - (1 - a_e - a_o) t_e[h-1] - a_e t_in[h-1] = a_o t_out[h-1]
    t_out_prev = np.concatenate([[sc.t_out[0]], sc.t_out[:-1]])
    r = recursion(t_e, [], a_o * t_out_prev)
    lagged(*r, t_e, start["t_e"], -(1.0 - a_e - a_o))
    lagged(*r, t_in, start["t_in"], -a_e)
    emit(*r, "te")

    return DayVars(y_imp, y_exp, y_ev, y_bch, y_bdch, q, soc_ev, soc_b, t_in, t_e)


def add_peak(b: LpBuilder, dv: DayVars, p0: float, p_max: float, cost: float = 0.0) -> int:
    """Peak variable with ``p >= p0`` and ``p >= y_imp[h]`` for every hour."""
    p = b.add_var(p0, p_max, cost, "peak")
    n = dv.y_imp.size
    rows = np.concatenate([np.arange(n), np.arange(n)])
    cols = np.concatenate([dv.y_imp, np.full(n, p)])
    vals = np.concatenate([np.ones(n), -np.ones(n)])
    b.add_rows(rows, cols, vals, LE, np.zeros(n), "peak")
    dv.peak = p
    return p


def add_future_cost(b: LpBuilder, dv: DayVars, curve) -> None:
    """Piecewise-linear cost of the achieved peak through SOS-2 weights."""
    pts = np.asarray(curve.grid.points, dtype=float)
    g = b.add_vars(pts.size, 0.0, 1.0, np.asarray(curve.values, dtype=float), "gamma")
    b.add_row(g, np.ones(pts.size), EQ, 1.0, "gamma_sum")
    b.add_row(np.append(g, dv.peak), np.append(pts, -1.0), EQ, 0.0, "gamma_peak")
    dv.gamma = g
    dv.sos = [Sos2Set(tuple(int(i) for i in g), tuple(pts))]


def build_day_problem(
    cfg: BuildingConfig,
    sc: DayScenario,
    st: DayState,
    curve=None,
    variant: PolicyVariant = PolicyVariant.SDP,
    scenario_id=None,
) -> tuple[LpModel, list[Sos2Set], DayVars]:
    variant = PolicyVariant(variant)
    if variant is PolicyVariant.SDP and curve is None:
        raise ValueError("the SDP variant needs a future cost curve")
    if variant is not PolicyVariant.SDP and curve is not None:
        raise ValueError(f"variant {variant.value} takes no future cost curve")
    if not 0.0 <= st.p0 <= cfg.grid.p_imp_max + 1e-12:
        raise ValueError(f"incoming peak {st.p0} outside [0, {cfg.grid.p_imp_max}]")
    problems = check_day_bands(cfg, sc)
    if problems:
        raise DayInfeasibleError("; ".join(problems), scenario_id)

    b = LpBuilder()
    dv = add_day_block(b, cfg, sc)
    if variant is not PolicyVariant.NO_PEAK:
        add_peak(b, dv, min(st.p0, cfg.grid.p_imp_max), cfg.grid.p_imp_max)
    if variant is PolicyVariant.SDP:
        add_future_cost(b, dv, curve)
    return b.build(), dv.sos, dv


def _interpolate_weights(points: np.ndarray, p: float) -> np.ndarray:
    """Adjacent-pair SOS-2 weights that reproduce ``p``."""
    w = np.zeros(points.size)
    k = int(np.clip(np.searchsorted(points, p, side="right") - 1, 0, points.size - 2))
    frac = (p - points[k]) / (points[k + 1] - points[k])
    frac = min(max(frac, 0.0), 1.0)
    w[k], w[k + 1] = 1.0 - frac, frac
    return w


def _solve(model, sos, method, tol, scenario_id, what):
    sol = solve_sos2(model, sos, method=method, tol=tol) if sos else solve_lp(model, method=method, tol=tol)
    if sol.status != "optimal":
        raise DayInfeasibleError(f"{what}: LP status {sol.status}", scenario_id)
    return sol


def solve_day(
    cfg: BuildingConfig,
    sc: DayScenario,
    st: DayState,
    curve=None,
    variant: PolicyVariant = PolicyVariant.SDP,
    *,
    method: str = "highs",
    tol: Tolerances = Tolerances(),
    scenario_id=None,
) -> DaySolution:
    variant = PolicyVariant(variant)
    model, sos, dv = build_day_problem(cfg, sc, st, curve, variant, scenario_id)
    convex = False
    if variant is PolicyVariant.SDP:
        convex = is_convex_curve(curve.values, curve.grid)
        if convex:
            # a convex curve is represented exactly by the hull relaxation
            sos = []

    if variant is PolicyVariant.MIN_PEAK:
        c_energy = model.c.copy()
        c_peak = np.zeros_like(c_energy)
        c_peak[dv.peak] = 1.0
        first = _solve(model.with_objective(c_peak), [], method, tol, scenario_id, "peak minimization")
        ub = model.ub.copy()
        ub[dv.peak] = min(first.x[dv.peak] + MINPEAK_SLACK, cfg.grid.p_imp_max)
        model = model.with_bounds(ub=ub).with_objective(c_energy)

    sol = _solve(model, sos, method, tol, scenario_id, f"{variant.value} day")
    x = sol.x

    cost_future = 0.0
    if variant is PolicyVariant.SDP:
        gamma = x[dv.gamma]
        if convex:
            gamma = _interpolate_weights(np.asarray(curve.grid.points), float(x[dv.peak]))
        cost_future = float(gamma @ np.asarray(curve.values, dtype=float))

    gr = cfg.grid
    cost_import = float(x[dv.y_imp] @ ((gr.c_grid + sc.spot) * (1.0 + gr.vat)))
    cost_export = float(x[dv.y_exp] @ sc.spot)
    peak = max(st.p0, float(np.max(x[dv.y_imp])))
    return DaySolution(
        y_imp=x[dv.y_imp],
        y_exp=x[dv.y_exp],
        y_ev_ch=x[dv.y_ev],
        y_b_ch=x[dv.y_bch],
        y_b_dch=x[dv.y_bdch],
        q_sh=x[dv.q],
        soc_ev=x[dv.soc_ev],
        soc_b=x[dv.soc_b],
        t_in=x[dv.t_in],
        t_e=x[dv.t_e],
        peak=peak,
        cost_import=cost_import,
        cost_export=cost_export,
        cost_future=cost_future,
        objective=cost_import - cost_export + cost_future,
        variant=variant,
        lp_nodes=sol.nodes,
        p0=st.p0,
    )
