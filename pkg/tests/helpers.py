"""Scenario builders and solution checks shared by the test modules."""

from __future__ import annotations

import dataclasses

import numpy as np

from peakval.dayopt import DayScenario, DaySolution
from peakval.model import BuildingConfig, case_study_config
from peakval.scenario import ScenarioSet, uniform_chain

H = 24

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def make_day(
    spot=0.05, load=0.0, pv=0.0, ev_avail=1.0, occupancy=1.0, t_out=22.0
) -> DayScenario:
    """DayScenario from scalars or 24-value sequences."""
    def full(v):
        return np.broadcast_to(np.asarray(v, dtype=float), (H,)).copy()

    return DayScenario(
        spot=full(spot), load=full(load), ev_avail=full(ev_avail), pv=full(pv),
        occupancy=full(occupancy), t_out=full(t_out),
    )


def inert_config(**grid_overrides) -> BuildingConfig:
    """Case-study house with no usable flexibility.

    Envelope and interior start in equilibrium with a 22 degC outdoor
    temperature, the battery and EV charger have zero rate, so an idle day
    costs nothing and every load must be imported in its own hour.
    """
    cfg = case_study_config()
    return dataclasses.replace(
        cfg,
        init=dataclasses.replace(cfg.init, t_e0=cfg.init.t_in0),
        battery=dataclasses.replace(cfg.battery, p_ch_max=0.0, p_dch_max=0.0),
        ev=dataclasses.replace(cfg.ev, p_ch_max=0.0),
        grid=dataclasses.replace(cfg.grid, **grid_overrides),
    )


def single_set(days: list[list[DayScenario]]) -> ScenarioSet:
    """ScenarioSet from ``days[g][s]``; DC production back-computed from AC."""
    return ScenarioSet(
        tuple(tuple(row) for row in days),
        tuple(tuple(d.pv / 0.95 for d in row) for row in days),
    )


def identity_chain(G: int, N_S: int, start: int = 0):
    chain = uniform_chain(G, N_S)
    trans = np.broadcast_to(np.eye(N_S), chain.transitions.shape).copy()
    init = np.zeros(N_S)
    init[start] = 1.0
    return dataclasses.replace(chain, transitions=trans, initial=init)


def assert_day_invariants(sol: DaySolution, sc: DayScenario, tol: float = 1e-7):
    """Balance residual, no simultaneous import/export or battery charge/discharge."""
    residual = (sol.y_imp - sol.y_exp + sc.pv + sol.y_b_dch
                - sc.load - sol.y_ev_ch - sol.q_sh - sol.y_b_ch)
    assert np.max(np.abs(residual)) <= tol
    if np.all(sc.spot >= 0):
        assert np.all(np.minimum(sol.y_imp, sol.y_exp) <= 1e-6)
    if np.all(sc.spot > 0):
        assert np.all(np.minimum(sol.y_b_ch, sol.y_b_dch) <= 1e-6)
    assert sol.peak >= sol.p0 - 1e-12
    assert sol.peak >= np.max(sol.y_imp) - 1e-9


def saturating_day() -> DayScenario:
    """Cold day with one free hour and a 6 h EV trip in the afternoon.

    Ignoring the peak, the free hour attracts EV charging, battery charging
    and pre-heating on top of the base load, more than the import cap.
    """
    spot = np.full(H, 0.5)
    spot[2] = 0.0
    away = np.ones(H)
    away[14:20] = 0.0
    return make_day(spot=spot, load=1.0, ev_avail=away, occupancy=away, t_out=-10.0)
