import numpy as np
import pytest

from helpers import assert_day_invariants, identity_chain, saturating_day, single_set
from peakval.dayopt import PolicyVariant
from peakval.model import PeakGrid
from peakval.scenario import sample_path, uniform_chain
from peakval.sdp import backward_pass
from peakval.sim import (
    ALL_CASES,
    DayCache,
    derive_seed,
    normalize_cases,
    results_csv,
    run_monte_carlo,
    run_replication,
    summarize,
    summary_csv,
    write_results,
)

TARIFF = 7.2075


@pytest.fixture(scope="module")
def small_table(cfg, small_synthetic):
    sset, chain = small_synthetic
    return backward_pass(cfg, sset, chain, PeakGrid.uniform(10.0, 11))


def test_nopeak_saturates_import_cap(cfg):
    sset = single_set([[saturating_day()] * 2] * 3)
    rec = run_replication(cfg, sset, uniform_chain(3, 2), None, PolicyVariant.NO_PEAK, seed=1)
    assert rec.final_peak == pytest.approx(cfg.grid.p_imp_max, abs=1e-7)


def test_record_accounting(cfg, small_synthetic, small_table):
    sset, chain = small_synthetic
    rec = run_replication(cfg, sset, chain, small_table, "SDP", seed=4)
    assert rec.final_peak == max(d.peak for d in rec.days)
    assert rec.total_cost == pytest.approx(rec.energy_cost + TARIFF * rec.final_peak, abs=1e-6)
    assert rec.days[0].p0 == 0.0
    for d, nxt in zip(rec.days, rec.days[1:]):
        assert nxt.p0 == d.peak
    for g, (d, s) in enumerate(zip(rec.days, rec.path.states)):
        assert_day_invariants(d, sset[g, s])


def test_replication_deterministic(cfg, small_synthetic, small_table):
    sset, _ = small_synthetic
    chain = identity_chain(sset.G, sset.N_S, start=1)
    a = run_replication(cfg, sset, chain, small_table, "SDP", seed=42)
    b = run_replication(cfg, sset, chain, small_table, "SDP", seed=42)
    assert a.path == b.path and a.path.states == (1,) * sset.G
    assert a.total_cost == b.total_cost and a.final_peak == b.final_peak


def test_single_day_cost_equals_value(cfg, small_synthetic):
    sset, chain = small_synthetic
    one, chain1 = sset.truncated(1), chain.truncated(1)
    table = backward_pass(cfg, one, chain1, PeakGrid.uniform(10.0, 11))
    for seed in range(4):
        rec = run_replication(cfg, one, chain1, table, "SDP", seed=seed)
        s = rec.path.states[0]
        assert rec.total_cost == pytest.approx(table.V[0, s, 0], abs=1e-6)


def test_table_required_only_for_sdp(cfg, small_synthetic, small_table):
    sset, chain = small_synthetic
    with pytest.raises(ValueError):
        run_replication(cfg, sset, chain, None, "SDP", seed=0)
    with pytest.raises(ValueError):
        run_replication(cfg, sset, chain, small_table, "MinPeak", seed=0)


def test_monte_carlo_counts_and_aggregation(cfg, small_synthetic, small_table):
    sset, chain = small_synthetic
    summaries, records = run_monte_carlo(cfg, sset, chain, small_table, ["SDP", "NoPeak", "MinPeak"], 12, 3)
    assert len(records) == 36 and len(summaries) == 3
    assert [r.case for r in records] == ["SDP"] * 12 + ["NoPeak"] * 12 + ["MinPeak"] * 12
    for s in summaries:
        costs = [r.total_cost for r in records if r.case == s.case]
        assert s.n == 12
        assert s.mean_cost == pytest.approx(np.mean(costs), abs=1e-9)
        assert s.sd_cost == pytest.approx(np.std(costs, ddof=1), abs=1e-9)


def test_single_rep_summary(cfg, small_synthetic, small_table):
    sset, _ = small_synthetic
    chain = identity_chain(sset.G, sset.N_S)
    summaries, records = run_monte_carlo(cfg, sset, chain, small_table, "SDP", 1, 0)
    assert len(summaries) == 1
    assert summaries[0].mean_cost == records[0].total_cost and summaries[0].sd_cost == 0.0


def test_common_random_numbers(cfg, small_synthetic, small_table):
    sset, chain = small_synthetic
    _, few = run_monte_carlo(cfg, sset, chain, small_table, "NoPeak", 8, 17)
    _, many = run_monte_carlo(cfg, sset, chain, small_table, "all", 8, 17)
    by_rep = {r.rep: r.path for r in many if r.case == "NoPeak"}
    for r in few:
        assert by_rep[r.rep] == r.path
        assert r.path == sample_path(chain, derive_seed(17, r.rep), sset.G)
    for rep in range(8):
        assert len({r.path for r in many if r.rep == rep}) == 1


def test_minpeak_peak_below_nopeak(cfg, small_synthetic, small_table):
    sset, chain = small_synthetic
    _, records = run_monte_carlo(cfg, sset, chain, None, ["NoPeak", "MinPeak"], 10, 5)
    peaks = {(r.case, r.rep): r.final_peak for r in records}
    for rep in range(10):
        assert peaks["MinPeak", rep] <= peaks["NoPeak", rep] + 1e-6


def test_cache_reuses_solutions(cfg, small_synthetic, small_table):
    sset, chain = small_synthetic
    cache = DayCache()
    a = run_replication(cfg, sset, chain, None, "NoPeak", seed=3, cache=cache)
    stored = len(cache._store)
    again = run_replication(cfg, sset, chain, None, "NoPeak", seed=3, cache=cache)
    fresh = run_replication(cfg, sset, chain, None, "NoPeak", seed=3)
    assert len(cache._store) == stored == sset.G
    assert a.total_cost == again.total_cost == fresh.total_cost


def test_parallel_matches_serial(cfg, small_synthetic, small_table):
    sset, chain = small_synthetic
    _, a = run_monte_carlo(cfg, sset, chain, small_table, "SDP,MinPeak", 6, 1)
    _, b = run_monte_carlo(cfg, sset, chain, small_table, "SDP,MinPeak", 6, 1, workers=2)
    assert results_csv(a, meta=False) == results_csv(b, meta=False)


@pytest.mark.parametrize("given, expected", [
    ("all", list(ALL_CASES)),
    ("SDP, NoPeak", ["SDP", "NoPeak"]),
    (["Hol", "Hol", "SDP"], ["Hol", "SDP"]),
])
def test_normalize_cases(given, expected):
    assert normalize_cases(given) == expected


@pytest.mark.parametrize("given", ["Peak", "", "SDP,bogus"])
def test_normalize_cases_rejects(given):
    with pytest.raises(ValueError):
        normalize_cases(given)


def test_csv_layout(cfg, small_synthetic, small_table, tmp_path):
    sset, chain = small_synthetic
    summaries, records = run_monte_carlo(cfg, sset, chain, small_table, "SDP,NoPeak", 3, 9)
    text = results_csv(records, meta=False).splitlines()
    assert text[0] == "case,seed,rep,total_cost_eur,energy_cost_eur,tariff_cost_eur,final_peak_kwh_h,path"
    row = text[1].split(",")
    assert row[0] == "SDP" and row[2] == "0"
    assert len(row[3].split(".")[1]) == 4 and len(row[6].split(".")[1]) == 3
    assert row[7].count("-") == sset.G - 1
    assert summary_csv(summaries, meta=False).splitlines()[0] == "case,n,mean_cost,sd_cost,mean_peak"
    rp, sp = write_results(records, summaries, tmp_path)
    assert rp.read_text().startswith("# peakval")


def test_summarize_skips_absent_cases(cfg, small_synthetic, small_table):
    sset, chain = small_synthetic
    _, records = run_monte_carlo(cfg, sset, chain, small_table, "SDP", 2, 0)
    assert [s.case for s in summarize(records, ["SDP", "Hol"])] == ["SDP"]
