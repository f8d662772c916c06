"""Solver runs with per-snapshot diagnostics, shared by the CLI and the acceptance suite."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import diagnostics as dg
from .boundary import BoundaryMotion, Regime
from .io import DIAGNOSTICS_HEADER
from .fv import FPProblem, Grid, Trajectory, build, run
from .kernels import CompactInitialData
from .profiles import Profile, make_profile


@dataclass
class RunResult:
    motion: BoundaryMotion
    problem: FPProblem
    profile: Profile
    trajectory: Trajectory
    rows: list[tuple]

    def column(self, name: str) -> np.ndarray:
        k = DIAGNOSTICS_HEADER.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def tau(self) -> np.ndarray:
        return self.column("tau")


def diagnostics_row(snapshot, profile: Profile) -> tuple:
    f = snapshot.field
    l1 = dg.l1_distance(f, profile)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", dg.MassMismatchWarning)
        H = dg.relative_entropy(f, profile)
        fisher = dg.fisher_information(f, profile).value
    ck = dg.check_csiszar_kullback(f, profile).slack
    lsi = dg.check_log_sobolev(f, profile).slack if profile.gaussian else math.nan
    return (snapshot.tau, snapshot.t, f.mass, l1, H, fisher, dg.first_moment(f), dg.boundary_value(f), ck, lsi)


def problem_for(bm: BoundaryMotion) -> FPProblem:
    """Self-similar frame for beta <= 1/2 and beta > 1/2; the comoving frame for beta = 1."""
    if bm.regime is Regime.LINEAR:
        return FPProblem.comoving(bm)
    return FPProblem.for_motion(bm)


def solve(bm: BoundaryMotion, init: CompactInitialData, n: int, tau_end: float, schedule: Sequence[float],
          length: float | None = None, problem: FPProblem | None = None) -> RunResult:
    problem = problem or problem_for(bm)
    if length is None:
        length = problem.default_length(init.support)
    grid = Grid(n, length)
    state = build(problem, grid, init)
    traj = run(state, tau_end, schedule)
    profile = make_profile(bm.c, bm.beta, bm.d, state.mass)
    rows = [diagnostics_row(s, profile) for s in traj]
    return RunResult(bm, problem, profile, traj, rows)


def schedule_for(bm: BoundaryMotion, t_end: float, count: int, extra_t: Sequence[float] = ()) -> np.ndarray:
    """Snapshot times in the run's own clock: uniform in tau, plus the rescaled images of ``extra_t``."""
    problem = problem_for(bm)
    tau_end = float(problem.rescaled_time(t_end))
    taus = tau_end * np.arange(1, count + 1) / count
    extra = [float(problem.rescaled_time(t)) for t in extra_t]
    taus = np.unique(np.concatenate([taus, extra]))
    taus[-1] = tau_end
    return taus


def theory_exponent(beta: float) -> float:
    """Power of (1+t) in the L1 rate: -1/2 at beta in {0, 1/2}, -(1/4 - beta/2) below 1/2, -(beta - 1/2) above."""
    if beta in (0.0, 0.5):
        return -0.5
    if beta < 0.5:
        return -(0.25 - 0.5 * beta)
    return -(beta - 0.5)


def rate_model(beta: float) -> str:
    return "power_log" if beta > 0.5 else "power"
