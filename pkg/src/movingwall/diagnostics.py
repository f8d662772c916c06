"""Distances, entropy functionals, functional-inequality checks and rate fits."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .boundary import BoundaryMotion
from .fv import DensityField
from .kernels import CompactInitialData
from .profiles import Profile

MASK_LEVEL = 1e-14


class MassMismatchWarning(UserWarning):
    pass


def _reference(field: DensityField, reference) -> tuple[np.ndarray, float]:
    """Cell values of the reference on the field's grid and its mass beyond L."""
    if isinstance(reference, Profile):
        return reference.tabulate(field.grid), float(reference.tail_mass(field.grid.length))
    if isinstance(reference, DensityField):
        if reference.grid != field.grid:
            raise ValueError("fields live on different grids")
        return reference.w, 0.0
    raise TypeError(f"unsupported reference type {type(reference).__name__}")


def l1_distance(field: DensityField, reference) -> float:
    """h sum |w_i - ref_i|, plus the reference mass beyond the truncation length."""
    ref, tail = _reference(field, reference)
    return field.grid.h * float(np.abs(field.w - ref).sum()) + tail


def _matched(field: DensityField, reference) -> tuple[np.ndarray, np.ndarray]:
    """Field values and reference values scaled to the field's mass.

    Sub-1e-8 mismatches (round-off accumulated over long runs) are absorbed
    silently; they would otherwise enter the entropy linearly.
    """
    ref, tail = _reference(field, reference)
    if np.any(field.w < 0):
        raise ValueError("density field has negative cells")
    ref_mass = field.grid.h * float(ref.sum()) + tail
    if abs(field.mass - ref_mass) > 1e-8 * ref_mass:
        warnings.warn(f"field mass {field.mass:.12g} differs from reference mass {ref_mass:.12g}; "
                      "renormalizing the reference", MassMismatchWarning, stacklevel=3)
    return field.w, ref * (field.mass / ref_mass)


def relative_entropy(field: DensityField, reference) -> float:
    """h sum w_i log(w_i / W_i), with 0 log 0 = 0."""
    w, ref = _matched(field, reference)
    pos = w > 0
    if np.any(pos & (ref <= 0)):
        return math.inf
    return field.grid.h * float(np.sum(w[pos] * np.log(w[pos] / ref[pos])))


class Fisher(NamedTuple):
    value: float
    masked_cells: int
    masked_mass: float


def fisher_information(field: DensityField, reference) -> Fisher:
    """h sum w_i (d/dy log(w_i / W_i))^2 by centered differences.

    Cells below 1e-14 max(w), and cells whose stencil touches one, are skipped;
    their count and mass are reported.
    """
    w, ref = _matched(field, reference)
    h = field.grid.h
    keep = w >= MASK_LEVEL * w.max()
    g = np.full_like(w, np.nan)
    g[keep] = np.log(w[keep] / ref[keep])
    grad = np.empty_like(w)
    grad[1:-1] = (g[2:] - g[:-2]) / (2.0 * h)
    grad[0] = (g[1] - g[0]) / h
    grad[-1] = (g[-1] - g[-2]) / h
    ok = np.isfinite(grad)
    value = h * float(np.sum(w[ok] * grad[ok] ** 2))
    return Fisher(value, int((~ok).sum()), h * float(w[~ok].sum()))


@dataclass(frozen=True)
class InequalityVerdict:
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def tol(self) -> float:
        return 1e-8 * max(abs(self.lhs), abs(self.rhs), 1.0)

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tol


def check_log_sobolev(field: DensityField, profile: Profile, rho: float | None = None) -> InequalityVerdict:
    """H(w|W) <= I(w|W) / (2 rho), with rho = 1/(2d) by default (so the bound reads H <= d I)."""
    if not profile.gaussian:
        raise ValueError("log-Sobolev check needs a uniformly convex potential (beta <= 1/2)")
    if rho is None:
        rho = 1.0 / (2.0 * profile.d)
    H = relative_entropy(field, profile)
    I = fisher_information(field, profile).value
    return InequalityVerdict(H, I / (2.0 * rho))


def check_csiszar_kullback(field: DensityField, reference, mass: float | None = None) -> InequalityVerdict:
    """||w - W||_1^2 <= 2 M H(w|W) for equal-mass densities."""
    ref, tail = _reference(field, reference)
    ref_mass = field.grid.h * float(ref.sum()) + tail
    if abs(field.mass - ref_mass) > 1e-8 * ref_mass:
        raise ValueError(f"Csiszar-Kullback needs equal masses: {field.mass:.12g} vs {ref_mass:.12g}")
    M = ref_mass if mass is None else mass
    return InequalityVerdict(l1_distance(field, reference) ** 2, 2.0 * M * relative_entropy(field, reference))


def first_moment(field: DensityField) -> float:
    return field.grid.h * float(np.dot(field.grid.centers, field.w))


def boundary_value(field: DensityField) -> float:
    """w(0) from the quadratic whose averages over the first three cells match the field."""
    w = field.w
    return float((11.0 * w[0] - 7.0 * w[1] + 2.0 * w[2]) / 6.0)


def _support_samples(v0: CompactInitialData, n: int = 20_001) -> np.ndarray:
    ys = np.concatenate([np.linspace(0.0, v0.support, n), np.asarray(v0.breakpoints, dtype=float)])
    return np.unique(ys)


def boundary_value_bound(v0: CompactInitialData, bm: BoundaryMotion) -> float:
    """Lambda with Lambda exp(-y^2/4d - psi(0) y/2d) >= v0(y) on the support (beta < 1/2).

    The scaled function is a supersolution of the diffusive-frame problem, and
    its boundary value is Lambda for every tau.
    """
    ys = _support_samples(v0)
    expo = ys * ys / (4.0 * bm.d) + bm.psi(0.0) * ys / (2.0 * bm.d)
    # sample both sides of each jump so the left limit of the data is covered
    vals = np.maximum(v0(ys), v0(np.maximum(ys - 1e-12, 0.0)))
    return float(np.max(vals * np.exp(expo)))


def first_moment_bound(v0: CompactInitialData, bm: BoundaryMotion) -> float:
    """Lambda = lambda (d/(c beta))^2, lambda making lambda exp(-c beta y/d + eta(0) y^2/2d) >= v0."""
    ys = _support_samples(v0)
    cb = bm.c * bm.beta
    expo = cb * ys / bm.d - bm.eta(0.0) * ys * ys / (2.0 * bm.d)
    vals = np.maximum(v0(ys), v0(np.maximum(ys - 1e-12, 0.0)))
    lam = float(np.max(vals * np.exp(expo)))
    return lam * (bm.d / cb) ** 2


@dataclass(frozen=True)
class RateFit:
    model: str
    exponent: float
    prefactor: float
    r2: float
    t_min: float
    t_max: float
    samples: int

    @property
    def log_corrected(self) -> bool:
        return self.model == "power_log"

    @property
    def decay(self) -> float:
        """Decay constant k of the exponential model (-exponent)."""
        return -self.exponent


def fit_rate(times: Sequence[float], distances: Sequence[float], model: str = "power",
             window: tuple[float, float] | None = None) -> RateFit:
    """Least-squares fit of a linearized decay model.

    power:        log d = log l + p log(1+t)
    power_log:    log d - log log(1+t) = log l + p log(1+t)
    exponential:  log d = log l + p t          (decay constant k = -p)

    The default window is [t_end/100, t_end].
    """
    t = np.asarray(times, dtype=float)
    dist = np.asarray(distances, dtype=float)
    if t.shape != dist.shape:
        raise ValueError("times and distances must have the same length")
    if np.any(dist <= 0):
        raise ValueError("distances must be strictly positive")
    if window is None:
        window = (t.max() / 100.0, t.max())
    lo, hi = window
    if not lo < hi:
        raise ValueError("fit window must satisfy t_min < t_max")
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 8:
        raise ValueError(f"fit window [{lo:g}, {hi:g}] holds {int(sel.sum())} samples, need >= 8")
    t, dist = t[sel], dist[sel]
    ylog = np.log(dist)
    if model == "power":
        x = np.log1p(t)
    elif model == "power_log":
        if np.any(t <= 0):
            raise ValueError("power_log model needs t > 0")
        x = np.log1p(t)
        ylog = ylog - np.log(x)
    elif model == "exponential":
        x = t
    else:
        raise ValueError(f"unknown rate model {model!r}")
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, ylog, rcond=None)
    resid = ylog - A @ coef
    ss_tot = float(np.sum((ylog - ylog.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(model, float(coef[1]), float(math.exp(coef[0])), r2, float(lo), float(hi), int(sel.sum()))
