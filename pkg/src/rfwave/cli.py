"""Batch command-line runner: green-props, profile, evolve, decay-study, ineq-suite."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .diagnostics import (
    energy_ledger, gnuplot_script, write_json, write_ledger_csv, write_snapshot_csv,
    write_trajectory_csv,
)
from .evolution import BlowUpError, perturbation
from .experiments import (
    GREEN_GRID, PROFILE_GRID, SMALL_DATA_FRACTION, burgers_closed_form, compute_profile, default_dt,
    decay_study, inequality_suite, run_perturbation, stability_checks,
)
from .green import UnderResolvedWarning, admissible_thetas, build_green, green_property_suite
from .grid import Grid, GridFunction
from .operator import RieszFellerParams
from .profile import (
    MONOTONE_TOL, ENDSTATE_TOL, Profile, ProfileError, load_profile, profile_speed,
)
from .results import CheckResult

log = logging.getLogger("rfwave")

T = TypeVar("T")
R = TypeVar("R")

EVOLVE_T = 50.0
DECAY_T = 200.0
DECAY_ALPHAS = (1.5, 1.75, 2.0)
PROFILE_RESIDUAL_TOL = 1e-6
CLOSED_FORM_TOL = 1e-6


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: int) -> list[R]:
    """Run independent jobs on worker threads; results come back in input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _tag(p: RieszFellerParams) -> str:
    return f"alpha{p.alpha:g}_theta{p.theta:g}"


def _report(cfg: ExperimentConfig, command: str, results: Iterable[CheckResult], out: Path,
            **extra) -> bool:
    results = list(results)
    payload = {
        "command": command,
        "config_hash": cfg.hash(),
        "version": __version__,
        "results": [r.as_dict() for r in results],
    }
    payload.update(extra)
    write_json(payload, out / f"{command}.json")
    ok = all(r.passed for r in results)
    for r in results:
        log.info("%s %s measured=%s", "PASS" if r.passed else "FAIL", r.name, r.measured)
    return ok


# ---------------------------------------------------------------- green-props

def cmd_green_props(cfg: ExperimentConfig, out: Path, threads: int = 1) -> bool:
    grid = cfg.grid_or(GREEN_GRID)
    if cfg.sweep.alphas:
        runs = [RieszFellerParams(a, th) for a in cfg.sweep.alphas for th in admissible_thetas(a)]
    else:
        runs = [cfg.params()]
    times = cfg.green.times

    def job(p: RieszFellerParams) -> list[CheckResult]:
        log.debug("green suite %s", _tag(p))
        return green_property_suite(p, grid, times, seed=cfg.sweep.seed)

    results = [r for rs in parallel_map(job, runs, threads) for r in rs]
    for p in runs:
        for t in times:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UnderResolvedWarning)
                build_green(p, grid, t).to_csv(out / f"green_{_tag(p)}_t{t:g}.csv")
    return _report(cfg, "green-props", results, out)


# ---------------------------------------------------------------- profile

def _profile(cfg: ExperimentConfig) -> Profile:
    params, f, wave = cfg.params(), cfg.flux_function(), cfg.wave_data()
    if cfg.output.profile_file:
        return load_profile(cfg.output.profile_file, params, f, wave)
    return compute_profile(params, f, wave, cfg.grid_or(PROFILE_GRID))


def profile_checks(cfg: ExperimentConfig, prof: Profile) -> list[CheckResult]:
    params, f, wave = cfg.params(), cfg.flux_function(), cfg.wave_data()
    out = [
        CheckResult("stationarity residual", prof.residual_norm < PROFILE_RESIDUAL_TOL,
                    prof.residual_norm, 0.0, PROFILE_RESIDUAL_TOL),
        CheckResult("monotone", prof.max_increment <= MONOTONE_TOL, prof.max_increment, "<= 0",
                    MONOTONE_TOL),
    ]
    left, right = prof.endstate_errors
    out.append(CheckResult("endstates attained", max(left, right) <= ENDSTATE_TOL, [left, right],
                           [wave.u_minus, wave.u_plus], ENDSTATE_TOL))
    s_fit = profile_speed(params, prof, f)
    out.append(CheckResult("speed", abs(s_fit - wave.s) <= 1e-8, s_fit, wave.s, 1e-8,
                           "least-squares flux balance against Rankine-Hugoniot"))
    if f.name == "burgers" and params.alpha == 2.0:
        err = float(np.max(np.abs(prof.ubar.values - burgers_closed_form(wave, np.asarray(prof.grid.x)))))
        out.append(CheckResult("Burgers closed form", err < CLOSED_FORM_TOL, err, 0.0, CLOSED_FORM_TOL))
    return out


def cmd_profile(cfg: ExperimentConfig, out: Path, threads: int = 1) -> bool:
    try:
        prof = _profile(cfg)
    except ProfileError as e:
        fail = CheckResult("relaxation converged", False, e.residual, 0.0, PROFILE_RESIDUAL_TOL, str(e))
        _report(cfg, "profile", [fail], out)
        return False
    prof.to_csv(out / f"profile_{_tag(cfg.params())}.csv")
    return _report(cfg, "profile", profile_checks(cfg, prof), out)


# ---------------------------------------------------------------- evolve

def _read_perturbation(path: str, grid: Grid) -> GridFunction:
    """Two-column CSV ``xi,v`` sampled on the profile grid."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["xi", "v"]:
        raise ConfigError(f"perturbation file needs header xi,v, got {rows[0]}")
    data = np.array([[float(c) for c in r] for r in rows[1:]])
    if data.shape[0] != grid.N or not np.allclose(data[:, 0], grid.x, rtol=0, atol=1e-12 * grid.L):
        raise ConfigError("perturbation file is not sampled on the profile grid")
    return GridFunction(grid, data[:, 1])


def _initial_data(cfg: ExperimentConfig, prof: Profile, amplitude: float, center: float) -> GridFunction:
    pc = cfg.perturbation
    if pc.shape == "file":
        return prof.ubar + _read_perturbation(pc.file, prof.grid)
    return prof.ubar + perturbation(prof.grid, pc.shape, amplitude, pc.width, center)


def _is_small(cfg: ExperimentConfig, amplitude: float) -> bool:
    return amplitude <= SMALL_DATA_FRACTION * cfg.wave_data().jump * (1 + 1e-12)


def _evolve_once(cfg: ExperimentConfig, prof: Profile, amplitude: float, with_pair: bool):
    params, f = cfg.params(), cfg.flux_function()
    ev = cfg.evolution
    T_end = ev.T if ev.T is not None else EVOLVE_T
    u0 = _initial_data(cfg, prof, amplitude, cfg.perturbation.center)
    pu0 = None
    if with_pair:
        pu0 = prof.ubar + perturbation(prof.grid, "gaussian", cfg.perturbation.pair_amplitude,
                                       cfg.perturbation.width, cfg.perturbation.pair_center)
    dt = ev.dt
    if dt is None:
        # one step size for both runs so the snapshots pair up
        both = u0.values if pu0 is None else np.concatenate([u0.values, pu0.values])
        dt = default_dt(prof, f, both)
    run = run_perturbation(params, prof, f, u0, T_end, dt, ev.record_every, ev.scheme)
    pair = None
    if pu0 is not None:
        pair = run_perturbation(params, prof, f, pu0, T_end, dt, ev.record_every, ev.scheme)
    small = cfg.perturbation.shape != "file" and _is_small(cfg, amplitude)
    checks = stability_checks(params, prof, f, run, pair, small_data=small,
                              decay_check=T_end >= DECAY_T)
    return run, checks


def cmd_evolve(cfg: ExperimentConfig, out: Path, threads: int = 1) -> bool:
    ev = cfg.evolution
    pc = cfg.perturbation
    prof = _profile(cfg)
    tag = _tag(cfg.params())
    try:
        run, checks = _evolve_once(cfg, prof, pc.amplitude, pc.pair_amplitude > 0)
    except BlowUpError as e:
        fail = CheckResult("no blow-up", False, e.t, None, None, str(e))
        _report(cfg, "evolve", [fail], out)
        return False
    traj = run.trajectory
    if pc.shape == "none":
        worst = float(max(traj.series("W_H1").max(), traj.series("U_Linf").max()))
        checks.insert(0, CheckResult("zero perturbation stays stationary", worst <= 1e-12, worst, 0.0, 1e-12))
    write_trajectory_csv(traj, out / f"trajectory_{tag}.csv")
    write_snapshot_csv(traj, -1, out / f"snapshot_final_{tag}.csv")
    write_ledger_csv(energy_ledger(traj, _is_small(cfg, pc.amplitude)), out / f"ledger_{tag}.csv")
    (out / f"trajectory_{tag}.gp").write_text(
        gnuplot_script([f"trajectory_{tag}.csv"], [tag], "L2", f"trajectory_{tag}.png"))
    extra = {"shift": run.x0, "boundary_amplitude": traj.boundary_amplitude,
             "boundary_flag": bool(traj.boundary_flag)}

    if cfg.sweep.amplitudes:
        amps = sorted(cfg.sweep.amplitudes)

        def job(a: float) -> dict:
            try:
                _, cs = _evolve_once(cfg, prof, a, False)
                return {"amplitude": a, "stable": all(c.passed for c in cs),
                        "failed": [c.name for c in cs if not c.passed]}
            except BlowUpError as e:
                return {"amplitude": a, "stable": False, "failed": [str(e)]}

        rows = parallel_map(job, amps, threads)
        boundary = None
        for r in rows:
            if not r["stable"]:
                break
            boundary = r["amplitude"]
        # exploratory: recorded, never asserted
        extra["amplitude_sweep"] = {"runs": rows, "largest_stable_amplitude": boundary}
    return _report(cfg, "evolve", checks, out, **extra)


# ---------------------------------------------------------------- decay-study

DECAY_COLUMNS = ("alpha", "theoretical_exponent", "fitted_exponent", "bound_constant_half",
                 "bound_constant_full", "boundary_amplitude")


def cmd_decay_study(cfg: ExperimentConfig, out: Path, threads: int = 1) -> bool:
    T_end = cfg.evolution.T if cfg.evolution.T is not None else DECAY_T
    if T_end < DECAY_T:
        raise ConfigError(f"decay-study needs T >= {DECAY_T:g}, got {T_end:g}")
    alphas = cfg.sweep.alphas or DECAY_ALPHAS
    f, wave = cfg.flux_function(), cfg.wave_data()
    grid = cfg.grid_or(PROFILE_GRID)
    jump = wave.jump
    fraction = cfg.perturbation.amplitude / jump

    def job(a: float):
        log.debug("decay study alpha=%g", a)
        theta = cfg.operator.theta if a == cfg.operator.alpha else 0.0
        return decay_study(a, f, wave, T_end, grid, theta, fraction, cfg.perturbation.width)

    rows = parallel_map(job, list(alphas), threads)
    results = []
    files, labels = [], []
    with open(out / "decay_table.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DECAY_COLUMNS)
        for row, traj in rows:
            w.writerow([repr(float(row.alpha)), repr(row.theoretical), repr(row.fitted),
                        repr(row.bound_half), repr(row.bound_full), repr(row.boundary_amplitude)])
            name = f"decay_alpha{row.alpha:g}.csv"
            write_trajectory_csv(traj, out / name)
            files.append(name)
            labels.append(f"alpha={row.alpha:g}")
            tag = f"alpha={row.alpha:g}"
            results.append(CheckResult(f"bound constant non-growing {tag}",
                                       row.bound_full <= row.bound_half * (1 + 1e-12),
                                       [row.bound_half, row.bound_full], "full <= half", 1e-12))
            results.append(CheckResult(f"fitted exponent {tag}", row.fitted <= row.theoretical + 0.05,
                                       row.fitted, row.theoretical, 0.05,
                                       f"boundary amplitude {row.boundary_amplitude:.3g}"))
    (out / "decay.gp").write_text(gnuplot_script(files, labels, "L2", "decay.png", "||U||_2"))
    table = [dict(zip(DECAY_COLUMNS, (r.alpha, r.theoretical, r.fitted, r.bound_half, r.bound_full,
                                      r.boundary_amplitude))) for r, _ in rows]
    return _report(cfg, "decay-study", results, out, table=table)


# ---------------------------------------------------------------- ineq-suite

def cmd_ineq_suite(cfg: ExperimentConfig, out: Path, threads: int = 1) -> bool:
    iq = cfg.ineq
    p = cfg.params()
    if cfg.sweep.alphas:
        ops = tuple(RieszFellerParams(a, 0.0) for a in cfg.sweep.alphas)
    elif 1 < p.alpha < 2:
        ops = (p,)
    else:
        # the singular-integral checks need 1 < alpha < 2
        ops = (RieszFellerParams(1.5, 0.3),)
    results = inequality_suite(cfg.grid_or(GREEN_GRID), iq.family_size, iq.bandwidth, cfg.sweep.seed,
                               iq.interp_sigmas, iq.epsilons, iq.nash_sigmas, iq.gn_sigmas, ops)
    return _report(cfg, "ineq-suite", results, out)


COMMANDS: dict[str, Callable[[ExperimentConfig, Path, int], bool]] = {
    "green-props": cmd_green_props,
    "profile": cmd_profile,
    "evolve": cmd_evolve,
    "decay-study": cmd_decay_study,
    "ineq-suite": cmd_ineq_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment file (defaults used when omitted)")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--verbose", action="store_true", help="log each check to stderr")
    parser = argparse.ArgumentParser(prog="rfwave", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.threads < 1:
        print("rfwave: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.output.directory)
        out.mkdir(parents=True, exist_ok=True)
        ok = COMMANDS[args.command](cfg, out, args.threads)
    except (ConfigError, OSError) as e:
        print(f"rfwave: {e}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
