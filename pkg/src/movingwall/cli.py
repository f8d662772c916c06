"""movingwall <mode> --config <path> [--out <dir>] [--seed <u64>] [--workers <n>]"""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import io
from .boundary import BoundaryMotion
from .config import MODES, ConfigError, ExperimentConfig, load, validate
from .experiments import problem_for, rate_model, solve, theory_exponent
from .fv import Grid
from .kernels import exact_solution_linear
from .particles import ParticleEnsemble, advance, default_dt, empirical_density, mean_position
from .svg import line_plot


def output_root(cfg: ExperimentConfig, flag: str | None) -> Path:
    """--out, then MOVINGWALL_OUT, then the config's ``out``."""
    if flag:
        return Path(flag)
    env = os.environ.get("MOVINGWALL_OUT")
    if env:
        return Path(env)
    return Path(cfg.out)


def _horizon(cfg: ExperimentConfig, problem) -> tuple[float, np.ndarray]:
    """tau_end and the snapshot schedule in the run's own clock."""
    in_tau = cfg.tau_end is not None
    if cfg.snapshots is not None:
        times = np.asarray(cfg.snapshots, dtype=float)
        end = cfg.tau_end if in_tau else (cfg.t_end if cfg.t_end is not None else times[-1])
        if times[-1] > end:
            raise ConfigError("snapshots: last snapshot lies beyond the horizon")
    else:
        end = cfg.tau_end if in_tau else cfg.t_end
        times = end * np.arange(1, cfg.snapshot_count + 1) / cfg.snapshot_count
    if in_tau:
        return float(end), times
    return float(problem.rescaled_time(end)), np.asarray(problem.rescaled_time(times), dtype=float)


def run_solve(cfg: ExperimentConfig, out: Path) -> int:
    bm = BoundaryMotion(cfg.c, cfg.beta, cfg.d)
    problem = problem_for(bm)
    tau_end, sched = _horizon(cfg, problem)
    res = solve(bm, cfg.initial_data(), cfg.N, tau_end, sched, length=cfg.L, problem=problem)
    io.write_snapshots(out / "snapshots.csv", res.trajectory.snapshots)
    io.write_rows(out / "diagnostics.csv", io.DIAGNOSTICS_HEADER, res.rows)
    snaps = res.trajectory.snapshots
    picks = sorted({0, len(snaps) // 4, len(snaps) // 2, len(snaps) - 1})
    y = snaps[0].field.grid.centers
    series = [(f"tau={snaps[k].tau:.3g}", y, snaps[k].field.w) for k in picks]
    series.append(("profile W", y, res.profile.eval(y)))
    line_plot(out / "density.svg", series, title=f"density vs profile (beta={cfg.beta:g}, {problem.frame.value} frame)",
              xlabel="y", ylabel="w")
    line_plot(out / "distance.svg", [("L1 to profile", 1.0 + res.t, res.column("l1_to_profile"))],
              title="distance to the limit profile", xlabel="1+t", ylabel="L1", logx=True, logy=True)
    return 0


def run_kernel(cfg: ExperimentConfig, out: Path) -> int:
    v0 = cfg.initial_data()
    if cfg.snapshots is not None:
        times = list(cfg.snapshots)
    else:
        times = list(cfg.t_end * np.arange(1, cfg.snapshot_count + 1) / cfg.snapshot_count)
    length = cfg.L or 40.0 * max(math.sqrt(cfg.d), cfg.d / cfg.c, v0.support)
    x = Grid(cfg.N, length).centers
    rows = []
    for t in times:
        v = exact_solution_linear(v0, float(t), x, cfg.c, cfg.d)
        rows.extend((t, xi, vi) for xi, vi in zip(x, v))
    io.write_rows(out / "kernel.csv", ("t", "x", "v"), rows)
    return 0


def run_particles(cfg: ExperimentConfig, out: Path) -> int:
    bm = BoundaryMotion(cfg.c, cfg.beta, cfg.d)
    dt = cfg.dt or default_dt(cfg.d, cfg.c)
    ens = ParticleEnsemble.at(cfg.particles, cfg.start, bm, dt=dt, seed=cfg.seed)
    t_end = cfg.t_end if cfg.t_end is not None else cfg.snapshots[-1]
    times = cfg.snapshots or list(t_end * np.arange(1, cfg.snapshot_count + 1) / cfg.snapshot_count)
    ids = np.arange(min(cfg.trajectories, cfg.particles))
    traj = [(0.0, int(i), float(ens.positions[i])) for i in ids]
    means = []
    violations = 0
    for t in times:
        advance(ens, float(t))
        violations += int(np.sum(ens.positions < ens.wall))
        traj.extend((ens.t, int(i), float(ens.positions[i])) for i in ids)
        m = mean_position(ens)
        means.append((ens.t, m.mean, m.stderr))
    io.write_rows(out / "trajectories.csv", io.TRAJECTORY_HEADER, traj)
    io.write_rows(out / "mean.csv", ("t", "mean", "stderr"), means)
    spread = ens.comoving().max()
    length = cfg.hist_length or float(spread) * 1.05 + 1e-12
    hist = empirical_density(ens, Grid(cfg.hist_bins, length), "comoving")
    io.write_rows(out / "histogram.csv", io.SNAPSHOT_HEADER, io.snapshot_rows(ens.t, ens.t, hist.field))
    if hist.clipped:
        print(f"histogram: {hist.clipped} particles ({hist.clipped_mass:.3g} of the mass) outside [0, {length:g}]",
              file=sys.stderr)
    tt = np.array([0.0] + [float(t) for t in times])
    series = [(f"particle {i}", tt, [r[2] for r in traj if r[1] == i]) for i in ids]
    series.append(("wall b(t)", tt, bm.position(tt)))
    line_plot(out / "trajectories.svg", series, title=f"reflected walkers, beta={cfg.beta:g}", xlabel="t",
              ylabel="z")
    if violations:
        print(f"reflection invariant violated {violations} times", file=sys.stderr)
        return 1
    return 0


def _sweep_entry(args):
    cfg, beta, out = args
    try:
        bm = BoundaryMotion(cfg.c, beta, cfg.d)
        problem = problem_for(bm)
        entry = replace(cfg, beta=beta, tau_end=None)
        tau_end, sched = _horizon(entry, problem)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = solve(bm, cfg.initial_data(), cfg.N, tau_end, sched, length=cfg.L, problem=problem)
        io.write_rows(out / "diagnostics.csv", io.DIAGNOSTICS_HEADER, res.rows)
        fit = dg.fit_rate(res.t, res.column("l1_to_profile"), rate_model(beta))
        return beta, fit, None
    except Exception as exc:  # isolated per entry; reported by the caller
        return beta, None, f"{type(exc).__name__}: {exc}"


def sweep(cfg: ExperimentConfig, betas, out: Path, workers: int = 1):
    """One rate fit per beta. Returns (summary rows, failures)."""
    unique = []
    for b in betas:
        if b in unique:
            warnings.warn(f"duplicate beta {b:g} in sweep ignored", stacklevel=2)
        else:
            unique.append(float(b))
    if not unique:
        raise ConfigError("betas: sweep needs at least one beta")
    jobs = [(cfg, b, out / f"beta_{b:g}") for b in unique]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_entry, jobs))
    else:
        results = [_sweep_entry(j) for j in jobs]
    rows, records, failures = [], [], []
    for beta, fit, err in results:
        theory = theory_exponent(beta)
        if err is not None:
            failures.append((beta, err))
            rows.append((beta, math.nan, theory, math.nan, math.nan))
            continue
        rows.append((beta, fit.exponent, theory, fit.prefactor, fit.r2))
        records.append(io.rate_record(beta, fit, theory))
    io.write_rows(out / "rates.csv", io.SWEEP_HEADER, rows)
    io.write_jsonl(out / "rates.jsonl", records)
    return rows, failures


def run_rates(cfg: ExperimentConfig, out: Path) -> int:
    rows, failures = sweep(cfg, cfg.betas, out, cfg.workers)
    print(f"{'beta':>6} {'fitted':>9} {'theory':>9} {'R^2':>8}")
    for beta, p, theory, _, r2 in rows:
        print(f"{beta:6.3g} {p:9.4f} {theory:9.4f} {r2:8.5f}")
    for beta, err in failures:
        print(f"beta={beta:g} failed: {err}", file=sys.stderr)
    return 1 if failures else 0


def run_verify(cfg: ExperimentConfig, out: Path) -> int:
    from .acceptance import run_suite
    checks = run_suite(out, cfg.seed)
    passed = sum(c.passed for c in checks)
    print(f"{passed}/{len(checks)} acceptance criteria passed")
    return 0 if passed == len(checks) else 1


RUNNERS = {"solve": run_solve, "kernel": run_kernel, "particles": run_particles, "rates": run_rates,
           "verify": run_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="movingwall", description="Moving-wall diffusion experiments.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", help="flat key = value configuration file (optional for verify)")
    p.add_argument("--out", help="output directory (overrides MOVINGWALL_OUT and the config)")
    p.add_argument("--seed", type=int, help="unsigned 64-bit run seed")
    p.add_argument("--workers", type=int, help="worker processes for sweeps")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is None:
            if args.mode != "verify":
                raise ConfigError(f"config: mode {args.mode} needs --config")
            cfg = ExperimentConfig()
        else:
            cfg = load(args.config)
        if cfg.mode is not None and cfg.mode != args.mode:
            raise ConfigError(f"mode: config says {cfg.mode!r} but the command line asks for {args.mode!r}")
        if args.seed is not None:
            cfg.seed = args.seed
        if args.workers is not None:
            cfg.workers = args.workers
        validate(cfg, args.mode)
        out = output_root(cfg, args.out)
        out.mkdir(parents=True, exist_ok=True)
        return RUNNERS[args.mode](cfg, out)
    except ConfigError as exc:
        print(f"movingwall: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
