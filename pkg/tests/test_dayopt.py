import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import assert_day_invariants, inert_config, make_day
from peakval.dayopt import (
    DayInfeasibleError,
    DayScenario,
    DayState,
    PolicyVariant,
    build_day_problem,
    solve_day,
    thermal_trajectory,
)
from peakval.model import case_study_grid
from peakval.sdp import CostCurve, terminal_curve

TARIFF = 7.2075


@pytest.fixture(scope="module")
def inert():
    return inert_config()


@pytest.fixture(scope="module")
def terminal():
    return terminal_curve(case_study_grid(), TARIFF)


@pytest.mark.parametrize("p0", [0.0, 2.5, 7.25])
def test_idle_day_costs_only_the_future(inert, terminal, p0):
    sc = make_day(load=0.0, occupancy=0.0, ev_avail=1.0, t_out=22.0)
    sol = solve_day(inert, sc, DayState(p0), terminal)
    assert sol.objective == pytest.approx(TARIFF * p0, abs=1e-6)
    assert sol.cost_future == pytest.approx(TARIFF * p0, abs=1e-6)
    for flow in (sol.y_imp, sol.y_exp, sol.y_ev_ch, sol.y_b_ch, sol.y_b_dch, sol.q_sh):
        assert np.max(np.abs(flow)) <= 1e-7
    assert_day_invariants(sol, sc)


def test_cold_occupied_day_heats_within_band(cfg, terminal):
    sc = make_day(load=0.5, occupancy=1.0, t_out=-15.0)
    sol = solve_day(cfg, sc, DayState(0.0), terminal)
    assert np.max(sol.q_sh) > 0
    assert np.all(sol.t_in >= 20.5 - 1e-7) and np.all(sol.t_in <= 24.0 + 1e-7)
    assert_day_invariants(sol, sc)


def test_forced_saturation(inert, terminal):
    sc = make_day(load=10.0, occupancy=0.0)
    sol = solve_day(inert, sc, DayState(0.0), terminal)
    assert np.allclose(sol.y_imp, 10.0, atol=1e-7)
    assert sol.peak == pytest.approx(10.0, abs=1e-9)


def test_single_must_serve_hour_terminal_cost(inert, terminal):
    load = np.zeros(24)
    load[11] = 5.0
    sc = make_day(load=load, occupancy=0.0)
    sol = solve_day(inert, sc, DayState(0.0), terminal)
    assert sol.peak == pytest.approx(5.0, abs=1e-7)
    assert sol.cost_future == pytest.approx(36.0375, abs=1e-6)
    assert_day_invariants(sol, sc)


def test_minpeak_flat_load(inert):
    sc = make_day(load=2.0, occupancy=0.0)
    sol = solve_day(inert, sc, DayState(0.0), variant=PolicyVariant.MIN_PEAK)
    assert sol.peak == pytest.approx(2.0, abs=1e-6)
    assert sol.cost_future == 0.0


def test_sdp_beats_nopeak_realized_total(cfg, terminal, synthetic):
    sset, _ = synthetic
    for g, s in [(0, 0), (5, 2), (17, 3)]:
        sc = sset[g, s]
        sdp = solve_day(cfg, sc, DayState(0.0), terminal)
        nopeak = solve_day(cfg, sc, DayState(0.0), variant=PolicyVariant.NO_PEAK)
        assert sdp.objective <= nopeak.energy_cost + TARIFF * nopeak.peak + 1e-6
        assert_day_invariants(sdp, sc)
        assert_day_invariants(nopeak, sc)


@pytest.mark.parametrize("variant", list(PolicyVariant))
def test_invariants_on_synthetic_days(cfg, terminal, synthetic, variant):
    sset, _ = synthetic
    curve = terminal if variant is PolicyVariant.SDP else None
    for g in range(0, sset.G, 6):
        for s in range(sset.N_S):
            sc = sset[g, s]
            sol = solve_day(cfg, sc, DayState(1.0), curve, variant)
            assert_day_invariants(sol, sc)
            lo, hi = cfg.ev.soc_bounds_connected
            assert np.all(sol.soc_ev >= lo - 1e-7) and np.all(sol.soc_ev <= hi + 1e-7)
            assert sol.soc_ev[-1] == pytest.approx(cfg.init.soc_ev0, abs=1e-7)
            assert sol.soc_b[-1] == pytest.approx(cfg.init.soc_b0, abs=1e-7)
            assert sol.t_in[-1] == pytest.approx(cfg.init.t_in0, abs=1e-7)
            assert sol.t_e[-1] == pytest.approx(cfg.init.t_e0, abs=1e-7)
            for h in sc.departure_hours:
                assert sol.soc_ev[h] >= cfg.ev.soc_min_departure - 1e-7


def test_objective_monotone_in_incoming_peak(cfg, synthetic):
    sset, _ = synthetic
    grid = case_study_grid()
    # a concave-ish nonconvex curve still satisfying the slope bounds
    vals = TARIFF * np.minimum(grid.array, 3.0) + 2.0 * np.maximum(grid.array - 3.0, 0.0)
    curve = CostCurve(grid, vals)
    sc = sset[3, 1]
    objs = [solve_day(cfg, sc, DayState(p), curve).objective for p in np.linspace(0, 6, 7)]
    slope = TARIFF
    for a, b in zip(objs, objs[1:]):
        assert b >= a - 1e-6
        assert b - a <= slope * 1.0 + 1e-6


def test_nonconvex_curve_branches(cfg, synthetic):
    sset, _ = synthetic
    grid = case_study_grid()
    vals = 5.0 * np.sqrt(grid.array)  # concave: the hull relaxation is not exact
    vals = np.minimum(vals, TARIFF * grid.array)
    curve = CostCurve(grid, vals)
    sol = solve_day(cfg, sset[0, 0], DayState(0.0), curve)
    assert sol.cost_future == pytest.approx(curve(sol.peak), abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(
    t_in0=st.floats(19.0, 26.0),
    gap=st.floats(0.0, 10.0),
    t_out=st.floats(-20.0, 15.0),
)
def test_thermal_sanity_without_heating(cfg, t_in0, gap, t_out):
    # with ordered states (outdoor, envelope, interior on one side) the
    # interior approaches the outdoor temperature monotonically
    sign = 1.0 if t_in0 >= t_out else -1.0
    t_e0 = t_in0 - sign * min(gap, abs(t_in0 - t_out))
    t_in, _ = thermal_trajectory(cfg, np.zeros(24), np.full(24, t_out), t_in0, t_e0)
    dist = np.abs(np.concatenate([[t_in0], t_in]) - t_out)
    assert np.all(np.diff(dist) <= 1e-12)


def test_thermal_trajectory_matches_lp(cfg, terminal):
    sc = make_day(load=0.3, occupancy=1.0, t_out=np.linspace(-10, 0, 24))
    sol = solve_day(cfg, sc, DayState(0.0), terminal)
    t_in, t_e = thermal_trajectory(cfg, sol.q_sh, sc.t_out, cfg.init.t_in0, cfg.init.t_e0)
    assert np.allclose(t_in, sol.t_in, atol=1e-6)
    assert np.allclose(t_e, sol.t_e, atol=1e-6)


def test_sdp_needs_curve(cfg):
    with pytest.raises(ValueError, match="curve"):
        build_day_problem(cfg, make_day(), DayState(0.0), None, PolicyVariant.SDP)


def test_nopeak_rejects_curve(cfg, terminal):
    with pytest.raises(ValueError):
        build_day_problem(cfg, make_day(), DayState(0.0), terminal, PolicyVariant.NO_PEAK)


def test_unreachable_departure_is_structured(cfg, terminal):
    # EV gone from the first hour for 20 hours: 20 kWh drain from 14.4 kWh
    avail = np.ones(24)
    avail[0:20] = 0.0
    sc = make_day(ev_avail=avail, t_out=0.0)
    with pytest.raises(DayInfeasibleError) as info:
        solve_day(cfg, sc, DayState(0.0), terminal, scenario_id=(4, 2))
    assert info.value.scenario_id == (4, 2)
    assert "EV minimum SoC" in info.value.reason


def test_departure_soc_named(cfg, terminal):
    big = dataclasses.replace(cfg, ev=dataclasses.replace(cfg.ev, p_ch_max=0.5,
                                                          soc_min_departure=21.0))
    avail = np.ones(24)
    avail[2:5] = 0.0
    with pytest.raises(DayInfeasibleError, match="departure SoC"):
        solve_day(big, make_day(ev_avail=avail, t_out=0.0), DayState(0.0), terminal)


def test_departure_hours():
    avail = np.ones(24)
    avail[8:16] = 0.0
    avail[20:] = 0.0
    assert make_day(ev_avail=avail).departure_hours.tolist() == [7, 19]


def test_scenario_shape_validated():
    with pytest.raises(ValueError, match="24 hourly values"):
        DayScenario(spot=np.zeros(23), load=np.zeros(24), ev_avail=np.ones(24), pv=np.zeros(24),
                    occupancy=np.ones(24), t_out=np.zeros(24))


@pytest.mark.parametrize("variant", list(PolicyVariant))
def test_simplex_agrees_with_highs(cfg, terminal, synthetic, variant):
    sset, _ = synthetic
    sc = sset[2, 1]
    curve = terminal if variant is PolicyVariant.SDP else None
    a = solve_day(cfg, sc, DayState(1.5), curve, variant, method="highs")
    b = solve_day(cfg, sc, DayState(1.5), curve, variant, method="simplex")
    assert b.objective == pytest.approx(a.objective, rel=1e-6, abs=1e-6)
    assert_day_invariants(b, sc)
