"""Reflected random walkers in front of the moving wall z = b(t).

Each particle owns a Philox4x32-10 stream: the key is the 64-bit run seed and
the counter is (particle id, step index), so trajectories do not depend on the
order in which particles are processed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numba
import numpy as np

from .boundary import BoundaryMotion
from .fv import DensityField, Grid

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)


@numba.njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32-10 block function on 32-bit words held in uint64."""
    mask = np.uint64(0xFFFFFFFF)
    shift = np.uint64(32)
    for r in range(10):
        p0 = np.uint64(0xD2511F53) * c0
        p1 = np.uint64(0xCD9E8D57) * c2
        hi0 = p0 >> shift
        lo0 = p0 & mask
        hi1 = p1 >> shift
        lo1 = p1 & mask
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0) & mask, lo1, (hi0 ^ c3 ^ k1) & mask, lo0
        if r < 9:
            k0 = (k0 + np.uint64(0x9E3779B9)) & mask
            k1 = (k1 + np.uint64(0xBB67AE85)) & mask
    return c0, c1, c2, c3


@numba.njit(cache=True)
def _normal(pid, step, k0, k1):
    mask = np.uint64(0xFFFFFFFF)
    shift = np.uint64(32)
    pid = np.uint64(pid)
    step = np.uint64(step)
    x0, x1, x2, x3 = philox4x32(pid & mask, pid >> shift, step & mask, step >> shift, k0, k1)
    # two 53-bit uniforms, the first shifted into (0, 1] for the logarithm
    u1 = ((x0 >> np.uint64(5)) * 67108864.0 + (x1 >> np.uint64(6)) + 1.0) / 9007199254740992.0
    u2 = ((x2 >> np.uint64(5)) * 67108864.0 + (x3 >> np.uint64(6))) / 9007199254740992.0
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@numba.njit(cache=True)
def _advance(z, ids, step0, walls, scale, k0, k1):
    """Euler-Maruyama increments with mirror reflection about walls[k] after step k."""
    nsteps = walls.size
    for j in range(z.size):
        pos = z[j]
        pid = ids[j]
        for k in range(nsteps):
            pos += scale[k] * _normal(pid, step0 + k, k0, k1)
            if pos < walls[k]:
                pos = 2.0 * walls[k] - pos
        z[j] = pos


def _key(seed: int) -> tuple[np.uint64, np.uint64]:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


def normals(seed: int, particle_ids, step: int) -> np.ndarray:
    """The standard normal variates the ensemble draws at ``step`` (for inspection and tests)."""
    k0, k1 = _key(seed)
    return np.array([_normal(int(p), step, k0, k1) for p in np.atleast_1d(particle_ids)])


def default_dt(d: float, c: float) -> float:
    return 1e-3 * min(1.0, d / (c * c))


@dataclass
class ParticleEnsemble:
    """N walkers with reflection at the wall of ``boundary``.

    ``diffusivity`` overrides the boundary's d; zero gives a deterministic ensemble.
    """

    positions: np.ndarray
    boundary: BoundaryMotion
    dt: float
    seed: int = 0
    t: float = 0.0
    step: int = 0
    ids: np.ndarray = field(default=None)
    diffusivity: float | None = None

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.diffusivity is not None and not self.diffusivity >= 0:
            raise ValueError("diffusivity must be >= 0")
        if self.ids is None:
            self.ids = np.arange(self.positions.size, dtype=np.int64)
        wall = self.boundary.position(self.t)
        if np.any(self.positions < wall):
            raise ValueError("particles must start on the domain side of the wall")

    @classmethod
    def at(cls, n: int, start: float, boundary: BoundaryMotion, dt: float | None = None,
           seed: int = 0, diffusivity: float | None = None) -> "ParticleEnsemble":
        if dt is None:
            dt = default_dt(boundary.d, boundary.c)
        return cls(np.full(n, float(start)), boundary, dt, seed, diffusivity=diffusivity)

    @property
    def d(self) -> float:
        return self.boundary.d if self.diffusivity is None else self.diffusivity

    @property
    def wall(self) -> float:
        return self.boundary.position(self.t)

    def comoving(self) -> np.ndarray:
        return self.positions - self.wall


def advance(ensemble: ParticleEnsemble, t_end: float) -> ParticleEnsemble:
    """Step every particle to ``t_end``; the last step is shortened to land exactly."""
    if not t_end > ensemble.t:
        raise ValueError("t_end must exceed the current time")
    span = t_end - ensemble.t
    n = max(1, math.ceil(span / ensemble.dt - 1e-9))
    dts = np.full(n, ensemble.dt)
    dts[-1] = span - ensemble.dt * (n - 1)
    times = ensemble.t + np.cumsum(dts)
    times[-1] = t_end
    walls = np.asarray(ensemble.boundary.position(times), dtype=float)
    scale = np.sqrt(2.0 * ensemble.d * dts)
    k0, k1 = _key(ensemble.seed)
    _advance(ensemble.positions, ensemble.ids, ensemble.step, walls, scale, k0, k1)
    ensemble.t = float(t_end)
    ensemble.step += n
    return ensemble


class MeanEstimate(NamedTuple):
    mean: float
    stderr: float


def mean_position(ensemble: ParticleEnsemble) -> MeanEstimate:
    z = ensemble.positions
    if z.size < 2:
        raise ValueError("need at least two particles")
    return MeanEstimate(float(z.mean()), float(z.std(ddof=1) / math.sqrt(z.size)))


class Histogram(NamedTuple):
    field: DensityField
    clipped: int
    clipped_mass: float


def empirical_density(ensemble: ParticleEnsemble, grid: Grid, frame: str = "physical") -> Histogram:
    """Histogram normalized to unit mass; particles outside [0, L] are counted as clipped."""
    if frame == "physical":
        z = ensemble.positions
    elif frame == "comoving":
        z = ensemble.comoving()
    else:
        raise ValueError(f"frame must be 'physical' or 'comoving', got {frame!r}")
    idx = np.floor(z / grid.h).astype(np.int64)
    inside = (idx >= 0) & (idx < grid.n)
    counts = np.bincount(idx[inside], minlength=grid.n)
    clipped = int(z.size - inside.sum())
    w = counts / (z.size * grid.h)
    return Histogram(DensityField(grid, w), clipped, clipped / z.size)


def trajectories(ensemble: ParticleEnsemble, times: Iterable[float], particle_ids=None):
    """Advance through ``times`` and return rows (t, particle_id, z) for the selected particles."""
    sel = np.arange(ensemble.positions.size) if particle_ids is None else np.asarray(particle_ids)
    rows = [(ensemble.t, int(ensemble.ids[i]), float(ensemble.positions[i])) for i in sel]
    for t in times:
        advance(ensemble, t)
        rows.extend((ensemble.t, int(ensemble.ids[i]), float(ensemble.positions[i])) for i in sel)
    return rows
