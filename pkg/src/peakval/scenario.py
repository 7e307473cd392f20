"""Markov scenario lattice: file I/O, path sampling and a synthetic winter generator.

Day and scenario indices are 0-based in memory and 1-based in files and
reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dayopt import DayScenario
from .model import HOURS_PER_DAY

H = HOURS_PER_DAY
SERIES = ("spot", "load", "pv_dc", "ev_avail", "occupancy", "t_out")


class ScenarioError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """``days[g][s]`` is the realized day; ``pv_dc`` keeps the file's DC series."""

    days: tuple[tuple[DayScenario, ...], ...]
    pv_dc: tuple[tuple[np.ndarray, ...], ...]

    @property
    def G(self) -> int:
        return len(self.days)

    @property
    def N_S(self) -> int:
        return len(self.days[0])

    def __getitem__(self, key) -> DayScenario:
        g, s = key
        return self.days[g][s]

    def truncated(self, n_days: int) -> ScenarioSet:
        return ScenarioSet(self.days[:n_days], self.pv_dc[:n_days])


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """``transitions[g][s, s']`` moves from day ``g`` to ``g + 1``."""

    transitions: np.ndarray  # (G - 1, N_S, N_S)
    initial: np.ndarray  # (N_S,)

    @property
    def N_S(self) -> int:
        return self.initial.size

    def errors(self, tol: float = 1e-9) -> list[str]:
        errs = []
        if np.any(self.initial < 0) or abs(self.initial.sum() - 1.0) > tol:
            errs.append(f"initial distribution sums to {self.initial.sum():.9g}")
        if self.transitions.ndim != 3 or self.transitions.shape[1:] != (self.N_S, self.N_S):
            errs.append(f"transition array has shape {self.transitions.shape}")
            return errs
        if np.any(self.transitions < 0):
            errs.append("transition probabilities must be non-negative")
        sums = self.transitions.sum(axis=2)
        for g, s in zip(*np.nonzero(np.abs(sums - 1.0) > tol)):
            errs.append(f"transition row g={g + 1} s={s + 1} sums to {sums[g, s]:.9g}")
        return errs

    def row(self, g: int, s: int) -> np.ndarray:
        return self.transitions[g, s]

    def truncated(self, n_days: int) -> MarkovChain:
        return MarkovChain(self.transitions[: max(n_days - 1, 0)], self.initial)


@dataclass(frozen=True)
class ScenarioPath:
    states: tuple[int, ...]  # 0-based scenario per day

    def __len__(self) -> int:
        return len(self.states)

    def label(self) -> str:
        return "-".join(str(s + 1) for s in self.states)


def uniform_chain(G: int, N_S: int, rho_self: float | None = None) -> MarkovChain:
    """Constant transition matrix; ``rho_self`` on the diagonal, the rest spread evenly."""
    if N_S == 1:
        mat = np.ones((1, 1))
    elif rho_self is None:
        mat = np.full((N_S, N_S), 1.0 / N_S)
    else:
        other = (1.0 - rho_self) / (N_S - 1)
        mat = np.full((N_S, N_S), other)
        np.fill_diagonal(mat, rho_self)
    trans = np.broadcast_to(mat, (max(G - 1, 0), N_S, N_S)).copy()
    return MarkovChain(trans, np.full(N_S, 1.0 / N_S))


def sample_path(chain: MarkovChain, seed, G: int | None = None) -> ScenarioPath:
    """Draw ``s_1 ~ initial`` and ``s_{g+1} ~ transitions[g][s_g]``.

    ``seed`` may be an int, a SeedSequence or a Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    G = chain.transitions.shape[0] + 1 if G is None else G
    states = [int(rng.choice(chain.N_S, p=chain.initial))]
    for g in range(G - 1):
        states.append(int(rng.choice(chain.N_S, p=chain.transitions[g, states[-1]])))
    return ScenarioPath(tuple(states))


# --- files ---------------------------------------------------------------


def scenarios_from_dict(data: dict, pv_inverter_eff: float) -> tuple[ScenarioSet, MarkovChain]:
    errs: list[str] = []
    for key in ("G", "N_S", "days", "transitions", "initial_distribution"):
        if key not in data:
            errs.append(f"missing key {key!r}")
    if errs:
        raise ScenarioError(errs)
    G, N_S = int(data["G"]), int(data["N_S"])
    if G < 1 or N_S < 1:
        raise ScenarioError([f"need G >= 1 and N_S >= 1, got G={G} N_S={N_S}"])

    cells: dict[tuple[int, int], dict] = {}
    for day in data["days"]:
        g = int(day["g"])
        for sc in day["scenarios"]:
            cells[(g, int(sc["s"]))] = sc

    days, pv_dc = [], []
    for g in range(1, G + 1):
        row, row_dc = [], []
        for s in range(1, N_S + 1):
            cell = cells.get((g, s))
            if cell is None:
                errs.append(f"missing scenario g={g} s={s}")
                continue
            series = {}
            for name in SERIES:
                vals = cell.get(name)
                if vals is None:
                    errs.append(f"g={g} s={s}: missing series {name!r}")
                elif len(vals) != H:
                    errs.append(f"g={g} s={s}: series {name!r} has {len(vals)} values, expected {H}")
                else:
                    series[name] = np.asarray(vals, dtype=float)
            if len(series) != len(SERIES):
                continue
            try:
                row.append(
                    DayScenario(
                        spot=series["spot"],
                        load=series["load"],
                        ev_avail=series["ev_avail"],
                        pv=series["pv_dc"] * pv_inverter_eff,
                        occupancy=series["occupancy"],
                        t_out=series["t_out"],
                    )
                )
                row_dc.append(series["pv_dc"])
            except ValueError as exc:
                errs.append(f"g={g} s={s}: {exc}")
        days.append(tuple(row))
        pv_dc.append(tuple(row_dc))

    trans = np.asarray(data["transitions"], dtype=float)
    if trans.ndim == 2:
        trans = trans[None]
    if trans.ndim != 3:
        errs.append("transitions must be a list of N_S x N_S matrices")
    elif trans.shape[0] == 1 and G > 2:
        trans = np.broadcast_to(trans, (G - 1, N_S, N_S)).copy()
    elif trans.shape[0] != max(G - 1, 0) and not (G == 1 and trans.shape[0] <= 1):
        errs.append(f"expected {G - 1} transition matrices, got {trans.shape[0]}")
    if G == 1:
        trans = np.zeros((0, N_S, N_S))
    chain = MarkovChain(trans, np.asarray(data["initial_distribution"], dtype=float))
    if chain.initial.size != N_S:
        errs.append(f"initial distribution has {chain.initial.size} entries, expected {N_S}")
    else:
        errs.extend(chain.errors())
    if errs:
        raise ScenarioError(errs)
    return ScenarioSet(tuple(days), tuple(pv_dc)), chain


def scenarios_to_dict(sset: ScenarioSet, chain: MarkovChain) -> dict:
    days = []
    for g in range(sset.G):
        scs = []
        for s in range(sset.N_S):
            d = sset[g, s]
            scs.append(
                {
                    "s": s + 1,
                    "spot": d.spot.tolist(),
                    "load": d.load.tolist(),
                    "pv_dc": sset.pv_dc[g][s].tolist(),
                    "ev_avail": [int(v) for v in d.ev_avail],
                    "occupancy": [int(v) for v in d.occupancy],
                    "t_out": d.t_out.tolist(),
                }
            )
        days.append({"g": g + 1, "scenarios": scs})
    return {
        "G": sset.G,
        "N_S": sset.N_S,
        "days": days,
        "transitions": chain.transitions.tolist(),
        "initial_distribution": chain.initial.tolist(),
    }


def load_scenarios(path: str | Path, pv_inverter_eff: float = 0.95) -> tuple[ScenarioSet, MarkovChain]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}: not valid JSON ({exc})"]) from None
    return scenarios_from_dict(data, pv_inverter_eff)


def save_scenarios(sset: ScenarioSet, chain: MarkovChain, path: str | Path) -> None:
    # repr-exact floats keep the round trip bit-identical
    Path(path).write_text(json.dumps(scenarios_to_dict(sset, chain)) + "\n")


# --- synthetic data -------------------------------------------------------

# Hours (0-based, inclusive start, exclusive end) during which residents and
# the EV are away.  Longest absence is 9 h, which the default EV covers.
TEMPLATES: dict[str, tuple[int, int] | None] = {
    "workday": (8, 16),
    "home": None,
    "evening_out": (17, 22),
    "day_trip": (9, 18),
}


@dataclass(frozen=True)
class SyntheticParams:
    G: int = 31
    N_S: int = 4
    rho_self: float = 0.55
    spot_base: float = 0.030  # EUR/kWh
    spot_daily_amp: float = 0.012
    spot_scenario_spread: float = 0.006
    load_base: float = 0.5  # kWh
    load_morning: float = 1.0
    load_evening: float = 1.8
    load_scenario_spread: float = 0.5  # extra scaling across scenarios
    pv_peak_dc: float = 1.2  # kWh in the best midday hour
    t_out_mean: float = -4.0
    t_out_sd: float = 4.0
    t_out_range: tuple[float, float] = (-15.0, 3.0)
    t_out_daily_amp: float = 2.0
    pv_inverter_eff: float = 0.95

    def errors(self) -> list[str]:
        errs = []
        if self.G < 1:
            errs.append("G must be >= 1")
        if self.N_S < 1:
            errs.append("N_S must be >= 1")
        if self.N_S > 1 and not 0.0 <= self.rho_self <= 1.0:
            errs.append("rho_self must be in [0, 1]")
        if min(self.spot_base, self.load_base, self.pv_peak_dc) < 0:
            errs.append("amplitudes must be non-negative")
        if self.t_out_range[0] > self.t_out_range[1]:
            errs.append("t_out_range must be ordered")
        return errs


def _bump(hours: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-(((hours - center) / width) ** 2))


def generate_synthetic(params: SyntheticParams = SyntheticParams(), seed=7) -> tuple[ScenarioSet, MarkovChain]:
    """Winter-like days: two-hump spot prices and loads, short midday PV, four presence patterns."""
    errs = params.errors()
    if errs:
        raise ScenarioError(errs)
    rng = np.random.default_rng(seed)
    hours = np.arange(H, dtype=float)
    price_shape = 0.7 * _bump(hours, 8.5, 2.0) + 1.0 * _bump(hours, 18.0, 2.5) - 0.5 * _bump(hours, 3.0, 2.5)
    load_shape_m = _bump(hours, 7.5, 1.2)
    load_shape_e = _bump(hours, 18.5, 2.0)
    pv_shape = np.where((hours >= 9) & (hours <= 15), np.sin(np.pi * (hours - 8.5) / 7.0), 0.0)
    t_shape = np.cos(2 * np.pi * (hours - 14.0) / 24.0)
    names = list(TEMPLATES)
    centered = np.linspace(-1.0, 1.0, params.N_S) if params.N_S > 1 else np.zeros(1)

    days, pv_dc = [], []
    for g in range(params.G):
        day_level = rng.normal(0.0, 0.15)
        t_day = rng.normal(params.t_out_mean, params.t_out_sd)
        row, row_dc = [], []
        for s in range(params.N_S):
            off = centered[s]
            spot = params.spot_base * (1.0 + day_level) + params.spot_scenario_spread * off
            spot = spot + params.spot_daily_amp * price_shape * (1.0 + 0.3 * rng.normal())
            spot = np.maximum(spot + rng.normal(0.0, 0.001, H), 0.001)

            template = TEMPLATES[names[int(rng.integers(len(names)))]]
            present = np.ones(H)
            if template is not None:
                present[template[0] : template[1]] = 0.0

            scale = 1.0 + params.load_scenario_spread * (off + 1.0) / 2.0
            load = params.load_base + scale * (
                params.load_morning * load_shape_m + params.load_evening * load_shape_e
            )
            load = load * np.where(present == 1, 1.0, 0.4) * rng.uniform(0.9, 1.1, H)

            clearness = rng.uniform(0.1, 1.0)
            dc = params.pv_peak_dc * clearness * pv_shape
            dc = np.round(np.maximum(dc, 0.0), 6)

            lo, hi = params.t_out_range
            t_mean = float(np.clip(t_day + rng.normal(0.0, 1.5) - 1.0 * off, lo, hi))
            t_out = t_mean + params.t_out_daily_amp * t_shape

            row.append(
                DayScenario(
                    spot=np.round(spot, 6),
                    load=np.round(load, 6),
                    ev_avail=present,
                    pv=dc * params.pv_inverter_eff,
                    occupancy=present.copy(),
                    t_out=np.round(t_out, 4),
                )
            )
            row_dc.append(dc)
        days.append(tuple(row))
        pv_dc.append(tuple(row_dc))
    chain = uniform_chain(params.G, params.N_S, params.rho_self if params.N_S > 1 else None)
    return ScenarioSet(tuple(days), tuple(pv_dc)), chain
