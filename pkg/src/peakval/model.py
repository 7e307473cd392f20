"""Building, tariff and discretization parameters.

Everything here is a frozen dataclass.  Storage bounds are held in kWh;
config files may state them as percentages of capacity (``"unit": "percent"``),
which are converted on load.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

HOURS_PER_DAY = 24


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors) if self.errors else "invalid configuration")


@dataclass(frozen=True)
class ThermalParams:
    r_ie: float  # degC/kWh, interior <-> envelope
    r_eo: float  # degC/kWh, envelope <-> outdoor
    c_i: float  # kWh/degC
    c_e: float  # kWh/degC
    q_sh_max: float  # kWh/h
    t_in_bounds_occupied: tuple[float, float]
    t_in_bounds_away: tuple[float, float]
    # Scale the envelope-outdoor exchange by c_i instead of c_e (literal
    # reading of the printed envelope recursion).
    outdoor_term_uses_interior_capacity: bool = False


@dataclass(frozen=True)
class EvParams:
    capacity: float  # kWh
    eta_ch: float
    p_ch_max: float  # kWh/h
    soc_bounds_connected: tuple[float, float]  # kWh
    soc_min_departure: float  # kWh
    d_away: float  # kWh per absent hour


@dataclass(frozen=True)
class BatteryParams:
    capacity: float
    eta_ch: float
    eta_dch: float
    p_ch_max: float
    p_dch_max: float
    soc_bounds: tuple[float, float]


@dataclass(frozen=True)
class GridParams:
    c_grid: float  # EUR/kWh, before VAT
    vat: float
    peak_tariff: float  # EUR per kWh/h, VAT included
    p_imp_max: float
    p_exp_max: float | None = None  # defaults to p_imp_max

    @property
    def export_cap(self) -> float:
        return self.p_imp_max if self.p_exp_max is None else self.p_exp_max


@dataclass(frozen=True)
class InitialConditions:
    t_in0: float
    t_e0: float
    soc_ev0: float
    soc_b0: float


@dataclass(frozen=True)
class BuildingConfig:
    thermal: ThermalParams
    ev: EvParams
    battery: BatteryParams
    grid: GridParams
    init: InitialConditions
    pv_inverter_eff: float = 0.95
    horizon_days: int = 31
    hours_per_day: int = HOURS_PER_DAY


@dataclass(frozen=True)
class PeakGrid:
    """Discretized incoming-peak levels, ascending, from 0 to the import cap."""

    points: tuple[float, ...] = field(default_factory=tuple)

    @classmethod
    def uniform(cls, p_max: float, n_points: int) -> PeakGrid:
        if n_points < 2:
            raise ConfigError([f"peak grid needs at least 2 points, got {n_points}"])
        pts = np.linspace(0.0, p_max, n_points)
        return cls(tuple(float(p) for p in pts))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    @property
    def spacing(self) -> float:
        """Largest gap between neighbouring points."""
        return float(np.max(np.diff(self.array)))

    def index_of(self, value: float, tol: float = 1e-9) -> int:
        hits = np.flatnonzero(np.abs(self.array - value) <= tol)
        if hits.size == 0:
            raise KeyError(f"{value} is not a grid point")
        return int(hits[0])


def percent_to_kwh(percent: float, capacity: float) -> float:
    return percent / 100.0 * capacity


def kwh_to_percent(kwh: float, capacity: float) -> float:
    return kwh / capacity * 100.0


def config_errors(cfg: BuildingConfig, grid: PeakGrid | None = None) -> list[str]:
    """List every violated invariant of ``cfg`` (and ``grid`` when given)."""
    errs: list[str] = []
    th, ev, bat, gr, ini = cfg.thermal, cfg.ev, cfg.battery, cfg.grid, cfg.init

    for name in ("r_ie", "r_eo", "c_i", "c_e"):
        if not getattr(th, name) > 0:
            errs.append(f"{name} must be > 0")
    if th.q_sh_max < 0:
        errs.append("q_sh_max must be >= 0")
    occ_lo, occ_hi = th.t_in_bounds_occupied
    away_lo, away_hi = th.t_in_bounds_away
    if occ_lo > occ_hi or away_lo > away_hi:
        errs.append("interior temperature bands must have min <= max")
    if not (away_lo <= occ_lo and occ_hi <= away_hi):
        errs.append("occupied temperature band must lie inside the away band")

    if not 0 < ev.eta_ch <= 1:
        errs.append("eta_ch must be in (0,1]")
    ev_lo, ev_hi = ev.soc_bounds_connected
    if not 0 <= ev_lo <= ev.soc_min_departure <= ev_hi <= ev.capacity:
        errs.append("EV bounds must satisfy 0 <= soc_min <= soc_min_departure <= soc_max <= capacity")
    if ev.d_away < 0:
        errs.append("d_away must be >= 0")
    if ev.p_ch_max < 0:
        errs.append("EV p_ch_max must be >= 0")

    if not 0 < bat.eta_ch <= 1:
        errs.append("battery eta_ch must be in (0,1]")
    if not 0 < bat.eta_dch <= 1:
        errs.append("battery eta_dch must be in (0,1]")
    b_lo, b_hi = bat.soc_bounds
    if not 0 <= b_lo < b_hi <= bat.capacity:
        errs.append("battery bounds must satisfy 0 <= soc_min < soc_max <= capacity")
    if bat.p_ch_max < 0 or bat.p_dch_max < 0:
        errs.append("battery rates must be >= 0")

    for name in ("c_grid", "vat", "peak_tariff"):
        if getattr(gr, name) < 0:
            errs.append(f"{name} must be >= 0")
    if not gr.p_imp_max > 0:
        errs.append("p_imp_max must be > 0")
    if gr.export_cap < 0:
        errs.append("p_exp_max must be >= 0")

    if not away_lo <= ini.t_in0 <= away_hi:
        errs.append("t_in0 outside the interior temperature band")
    if not ev_lo <= ini.soc_ev0 <= ev_hi:
        errs.append("soc_ev0 outside the EV SoC band")
    if not b_lo <= ini.soc_b0 <= b_hi:
        errs.append("soc_b0 outside the battery SoC band")
    if not math.isfinite(ini.t_e0):
        errs.append("t_e0 must be finite")

    if cfg.horizon_days < 1:
        errs.append("horizon_days must be >= 1")
    if not 0 < cfg.pv_inverter_eff <= 1:
        errs.append("pv_inverter_eff must be in (0,1]")
    if cfg.hours_per_day != HOURS_PER_DAY:
        errs.append("hours_per_day must be 24")

    if grid is not None:
        errs.extend(grid_errors(grid, gr.p_imp_max))
    return errs


def grid_errors(grid: PeakGrid, p_imp_max: float) -> list[str]:
    pts = grid.array
    errs = []
    if pts.size < 2:
        return ["peak grid needs at least 2 points"]
    if np.any(np.diff(pts) <= 0):
        errs.append("peak grid must be strictly increasing")
    if pts[0] != 0.0:
        errs.append("peak grid must start at 0")
    if abs(pts[-1] - p_imp_max) > 1e-9:
        errs.append("peak grid must end at p_imp_max")
    return errs


def validate_config(cfg: BuildingConfig, grid: PeakGrid | None = None) -> BuildingConfig:
    """Return ``cfg`` unchanged, or raise :class:`ConfigError` listing every violation."""
    if cfg is None:
        raise ConfigError(["empty config"])
    errs = config_errors(cfg, grid)
    if errs:
        raise ConfigError(errs)
    return cfg


def case_study_config(horizon_days: int = 31) -> BuildingConfig:
    """Single-family house from the Norwegian case study.

    RC coefficients and device efficiencies are not published with the case
    study; the values below are plausible stand-ins for a well insulated
    single-zone house.
    """
    ev_cap = 24.0
    bat_cap = 5.0
    return BuildingConfig(
        thermal=ThermalParams(
            r_ie=1.0,
            r_eo=15.0,
            c_i=3.0,
            c_e=15.0,
            q_sh_max=3.0,
            t_in_bounds_occupied=(20.5, 24.0),
            t_in_bounds_away=(19.0, 26.0),
        ),
        ev=EvParams(
            capacity=ev_cap,
            eta_ch=0.95,
            p_ch_max=3.7,
            soc_bounds_connected=(percent_to_kwh(20, ev_cap), percent_to_kwh(90, ev_cap)),
            soc_min_departure=percent_to_kwh(60, ev_cap),
            d_away=1.0,
        ),
        battery=BatteryParams(
            capacity=bat_cap,
            eta_ch=0.95,
            eta_dch=0.95,
            p_ch_max=2.5,
            p_dch_max=2.5,
            soc_bounds=(percent_to_kwh(10, bat_cap), percent_to_kwh(100, bat_cap)),
        ),
        grid=GridParams(c_grid=0.00625, vat=0.25, peak_tariff=7.2075, p_imp_max=10.0),
        init=InitialConditions(
            t_in0=22.0,
            t_e0=20.0,
            soc_ev0=percent_to_kwh(60, ev_cap),
            soc_b0=percent_to_kwh(50, bat_cap),
        ),
        pv_inverter_eff=0.95,
        horizon_days=horizon_days,
    )


def case_study_grid(cfg: BuildingConfig | None = None, n_points: int = 41) -> PeakGrid:
    p_max = 10.0 if cfg is None else cfg.grid.p_imp_max
    return PeakGrid.uniform(p_max, n_points)


# --- JSON ------------------------------------------------------------------


def _energy(value: Any, capacity: float, what: str) -> float:
    if isinstance(value, dict):
        unit = value.get("unit", "kwh")
        v = float(value["value"])
        if unit == "percent":
            return percent_to_kwh(v, capacity)
        if unit == "kwh":
            return v
        raise ConfigError([f"{what}: unknown unit {unit!r}"])
    return float(value)


def _band(value: Any, capacity: float, what: str) -> tuple[float, float]:
    if isinstance(value, dict):
        unit = value.get("unit", "kwh")
        lo, hi = float(value["min"]), float(value["max"])
        if unit == "percent":
            return percent_to_kwh(lo, capacity), percent_to_kwh(hi, capacity)
        if unit != "kwh":
            raise ConfigError([f"{what}: unknown unit {unit!r}"])
        return lo, hi
    lo, hi = value
    return float(lo), float(hi)


def config_from_dict(data: dict) -> BuildingConfig:
    if not data:
        raise ConfigError(["empty config"])
    missing = [k for k in ("thermal", "ev", "battery", "grid", "init") if k not in data]
    if missing:
        raise ConfigError([f"missing section {k!r}" for k in missing])
    try:
        th = data["thermal"]
        thermal = ThermalParams(
            r_ie=float(th["r_ie"]),
            r_eo=float(th["r_eo"]),
            c_i=float(th["c_i"]),
            c_e=float(th["c_e"]),
            q_sh_max=float(th["q_sh_max"]),
            t_in_bounds_occupied=tuple(map(float, th["t_in_bounds_occupied"])),
            t_in_bounds_away=tuple(map(float, th["t_in_bounds_away"])),
            outdoor_term_uses_interior_capacity=bool(
                th.get("outdoor_term_uses_interior_capacity", False)
            ),
        )
        e = data["ev"]
        ev_cap = float(e["capacity"])
        ev = EvParams(
            capacity=ev_cap,
            eta_ch=float(e["eta_ch"]),
            p_ch_max=float(e["p_ch_max"]),
            soc_bounds_connected=_band(e["soc_bounds_connected"], ev_cap, "ev.soc_bounds_connected"),
            soc_min_departure=_energy(e["soc_min_departure"], ev_cap, "ev.soc_min_departure"),
            d_away=float(e["d_away"]),
        )
        b = data["battery"]
        b_cap = float(b["capacity"])
        battery = BatteryParams(
            capacity=b_cap,
            eta_ch=float(b["eta_ch"]),
            eta_dch=float(b["eta_dch"]),
            p_ch_max=float(b["p_ch_max"]),
            p_dch_max=float(b["p_dch_max"]),
            soc_bounds=_band(b["soc_bounds"], b_cap, "battery.soc_bounds"),
        )
        g = data["grid"]
        grid = GridParams(
            c_grid=float(g["c_grid"]),
            vat=float(g["vat"]),
            peak_tariff=float(g["peak_tariff"]),
            p_imp_max=float(g["p_imp_max"]),
            p_exp_max=None if g.get("p_exp_max") is None else float(g["p_exp_max"]),
        )
        i = data["init"]
        init = InitialConditions(
            t_in0=float(i["t_in0"]),
            t_e0=float(i["t_e0"]),
            soc_ev0=_energy(i["soc_ev0"], ev_cap, "init.soc_ev0"),
            soc_b0=_energy(i["soc_b0"], b_cap, "init.soc_b0"),
        )
        return BuildingConfig(
            thermal=thermal,
            ev=ev,
            battery=battery,
            grid=grid,
            init=init,
            pv_inverter_eff=float(data.get("pv_inverter_eff", 0.95)),
            horizon_days=int(data.get("horizon_days", 31)),
            hours_per_day=int(data.get("hours_per_day", HOURS_PER_DAY)),
        )
    except KeyError as exc:
        raise ConfigError([f"missing field {exc.args[0]!r}"]) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"malformed value: {exc}"]) from None


def config_to_dict(cfg: BuildingConfig) -> dict:
    d = asdict(cfg)
    for section in d.values():
        if isinstance(section, dict):
            for k, v in section.items():
                if isinstance(v, tuple):
                    section[k] = list(v)
    return d


def load_config(path: str | Path, grid: PeakGrid | None = None) -> BuildingConfig:
    with open(path) as fh:
        data = json.load(fh)
    return validate_config(config_from_dict(data), grid)


def save_config(cfg: BuildingConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
