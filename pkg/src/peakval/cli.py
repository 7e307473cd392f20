"""Command-line entry point: ``peakval gen | sdp | simulate | curves | config``."""

from __future__ import annotations

import dataclasses
import functools
import io
import logging
import os
import sys
import time
from pathlib import Path

import click

from .dayopt import DayInfeasibleError
from .lp import NumericalError
from .model import ConfigError, PeakGrid, load_config, case_study_config, save_config, validate_config
from .scenario import ScenarioError, SyntheticParams, generate_synthetic, load_scenarios, save_scenarios
from .sdp import CurveInvariantError, backward_pass, load_table, marginal_curve, save_table
from .sim import _meta_line, normalize_cases, run_monte_carlo, write_results

EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def _fail(msg: str, code: int):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ScenarioError) as exc:
            _fail(str(exc), EXIT_VALIDATION)
        except DayInfeasibleError as exc:
            _fail(str(exc), EXIT_INFEASIBLE)
        except (NumericalError, CurveInvariantError) as exc:
            _fail(str(exc), EXIT_NUMERICAL)
        except (ValueError, KeyError) as exc:
            _fail(str(exc), EXIT_VALIDATION)
        except OSError as exc:
            _fail(str(exc), EXIT_VALIDATION)

    return wrapper


def default_threads() -> int:
    env = os.environ.get("PEAKVAL_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _config(path, G: int, grid: PeakGrid | None = None):
    cfg = case_study_config(G) if path is None else load_config(path)
    cfg = dataclasses.replace(cfg, horizon_days=G)
    return validate_config(cfg, grid)


threads_option = click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=None,
    help="Worker processes (default: $PEAKVAL_THREADS or all cores).",
)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool):
    """Expected future cost curves for a monthly measured-peak grid tariff."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command("config")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handle_errors
def cmd_config(out):
    """Write the built-in case-study building configuration."""
    save_config(case_study_config(), out)
    click.echo(f"wrote {out}")


@main.command("gen")
@click.option("--days", "-G", "G", type=click.IntRange(min=1), default=31, show_default=True)
@click.option("--scenarios", "-S", "N_S", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--rho-self", type=click.FloatRange(0, 1), default=0.55, show_default=True,
              help="Probability of staying in the same scenario.")
@click.option("--pv-inverter-eff", type=click.FloatRange(0, 1, min_open=True), default=0.95, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handle_errors
def cmd_gen(G, N_S, rho_self, pv_inverter_eff, seed, out):
    """Generate a synthetic winter scenario lattice (scenarios.json)."""
    params = SyntheticParams(G=G, N_S=N_S, rho_self=rho_self, pv_inverter_eff=pv_inverter_eff)
    sset, chain = generate_synthetic(params, seed)
    save_scenarios(sset, chain, out)
    click.echo(f"wrote {out}: G={sset.G} N_S={sset.N_S}")


@main.command("sdp")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Building config JSON (default: built-in case study).")
@click.option("--scenarios", "scenarios_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--grid-points", type=click.IntRange(min=2), default=41, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--method", type=click.Choice(["highs", "simplex"]), default="highs", show_default=True)
@threads_option
@handle_errors
def cmd_sdp(config_path, scenarios_path, grid_points, out, method, threads):
    """Backward pass: value table and expected future cost curves (efcc.json)."""
    base = case_study_config() if config_path is None else load_config(config_path)
    sset, chain = load_scenarios(scenarios_path, base.pv_inverter_eff)
    grid = PeakGrid.uniform(base.grid.p_imp_max, grid_points)
    cfg = _config(config_path, sset.G, grid)
    t0 = time.perf_counter()
    table = backward_pass(cfg, sset, chain, grid, method=method, workers=threads or default_threads())
    save_table(table, out)
    click.echo(f"nodes: {table.nodes}")
    click.echo(f"wall time: {time.perf_counter() - t0:.1f} s")
    click.echo(f"wrote {out}")


@main.command("simulate")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--scenarios", "scenarios_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--efcc", "efcc_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--cases", default="all", show_default=True,
              help="Comma list of SDP, NoPeak, MinPeak, Hol, Hol_init, or 'all'.")
@click.option("--reps", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--no-header-meta", is_flag=True, help="Omit the timestamp line from the CSV files.")
@click.option("--method", type=click.Choice(["highs", "simplex"]), default="highs", show_default=True)
@threads_option
@handle_errors
def cmd_simulate(config_path, scenarios_path, efcc_path, cases, reps, seed, out, no_header_meta, method, threads):
    """Monte-Carlo comparison of the policy cases (results.csv, summary.csv)."""
    case_list = normalize_cases(cases)
    if "SDP" in case_list and efcc_path is None:
        raise click.UsageError("case SDP needs --efcc")
    base = case_study_config() if config_path is None else load_config(config_path)
    sset, chain = load_scenarios(scenarios_path, base.pv_inverter_eff)
    table = load_table(efcc_path) if efcc_path else None
    cfg = _config(config_path, sset.G, table.grid if table else None)
    if table is not None and (table.G, table.N_S) != (sset.G, sset.N_S):
        raise ValueError(f"efcc covers {table.G}x{table.N_S}, scenarios {sset.G}x{sset.N_S}")
    summaries, records = run_monte_carlo(
        cfg, sset, chain, table, case_list, reps, seed, method=method, workers=threads or default_threads()
    )
    rp, sp_ = write_results(records, summaries, out, meta=not no_header_meta)
    for s in summaries:
        click.echo(f"{s.case:9s} n={s.n:5d} mean_cost={s.mean_cost:.4f} sd={s.sd_cost:.4f} mean_peak={s.mean_peak:.3f}")
    click.echo(f"wrote {rp} and {sp_}")


@main.command("curves")
@click.option("--efcc", "efcc_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--day", "g", type=int, default=1, show_default=True)
@click.option("--scenario", "s", type=int, default=1, show_default=True)
@click.option("--marginal", is_flag=True, help="Emit segment slopes instead of curve values.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Default: stdout.")
@click.option("--no-header-meta", is_flag=True)
@handle_errors
def cmd_curves(efcc_path, g, s, marginal, out, no_header_meta):
    """Print one expected future cost curve (or its marginal) as CSV."""
    table = load_table(efcc_path)
    if not (1 <= g <= table.G and 1 <= s <= table.N_S):
        raise ValueError(f"no curve for day {g} scenario {s}; table has {table.G} days x {table.N_S} scenarios")
    curve = table.curve(g - 1, s - 1)
    buf = io.StringIO()
    if not no_header_meta:
        buf.write(_meta_line())
    pts = curve.grid.array
    if marginal:
        buf.write("P_n,slope_eur_per_kwh_h\n")
        for p, v in zip(pts[:-1], marginal_curve(curve)):
            buf.write(f"{p:.3f},{v:.4f}\n")
    else:
        buf.write("P_n,value_eur\n")
        for p, v in zip(pts, curve.values):
            buf.write(f"{p:.3f},{v:.4f}\n")
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        click.echo(buf.getvalue(), nl=False)


if __name__ == "__main__":
    main()
