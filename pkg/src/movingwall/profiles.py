"""Stationary / self-similar limit profiles W(y) = W(0) exp(-Phi(y)/D)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryMotion, Regime, scaling_map
from .kernels import erfcx


@dataclass(frozen=True)
class Profile:
    regime: Regime
    c: float
    beta: float
    d: float
    mass: float
    W0: float

    @property
    def gaussian(self) -> bool:
        return self.regime.diffusive

    @property
    def diffusivity(self) -> float:
        """D of the frame in which W is stationary."""
        return 2.0 * self.d if self.gaussian else self.d

    @property
    def rate(self) -> float:
        """Exponential decay rate c beta / d (super-critical shapes only)."""
        return self.c * self.beta / self.d

    @property
    def offset(self) -> float:
        """Linear drift offset in the diffusive frame: c at beta = 1/2, else 0."""
        return self.c if self.regime is Regime.CRITICAL else 0.0

    def potential_slope(self, y):
        """Phi'(y), so that D W' + Phi' W = 0."""
        y = np.asarray(y, dtype=float)
        if self.gaussian:
            return y + self.offset
        return np.full_like(y, self.c * self.beta)

    def log_eval(self, y):
        y = np.asarray(y, dtype=float)
        if self.gaussian:
            expo = -(y * y) / (4.0 * self.d) - self.offset * y / (2.0 * self.d)
        else:
            expo = -self.rate * y
        return math.log(self.W0) + expo

    def eval(self, y):
        if np.any(np.asarray(y) < 0):
            raise ValueError("profiles are defined for y >= 0")
        out = np.exp(self.log_eval(y))
        return out if np.ndim(out) else float(out)

    __call__ = eval

    def tail_mass(self, a):
        """int_a^inf W, in closed form."""
        a = np.asarray(a, dtype=float)
        if self.gaussian:
            s = math.sqrt(self.d)
            z = (a + self.offset) / (2.0 * s)
            # W0 sqrt(pi d) exp(c^2/4d) erfc(z), written through erfcx for large z
            expo = self.offset ** 2 / (4.0 * self.d) - z * z
            out = self.W0 * math.sqrt(math.pi * self.d) * np.exp(expo) * erfcx(z)
        else:
            out = self.W0 / self.rate * np.exp(-self.rate * a)
        return out if np.ndim(out) else float(out)

    def cell_integrals(self, edges):
        """Exact integrals of W between consecutive edges."""
        tails = self.tail_mass(np.asarray(edges, dtype=float))
        return tails[:-1] - tails[1:]

    def first_moment(self) -> float:
        """int_0^inf y W(y) dy."""
        if self.gaussian:
            # int y e^{-(y^2 + 2 c y)/(4d)} = 2d W(0) - c * mass
            return 2.0 * self.d * self.W0 - self.offset * self.mass
        return self.mass / self.rate

    def tabulate(self, grid) -> np.ndarray:
        """Cell-midpoint samples scaled to carry the exact mass of W on [0, L].

        The scaled samples are the discrete steady state of the exponentially
        fitted solver for every affine drift.
        """
        samples = self.eval(grid.centers)
        target = self.mass - self.tail_mass(grid.length)
        return samples * (target / (grid.h * samples.sum()))


def make_profile(c: float, beta: float, d: float, M: float) -> Profile:
    """Limit profile of the regime selected by ``beta``, normalized to mass ``M``."""
    if not M > 0:
        raise ValueError(f"mass M must be > 0, got {M}")
    bm = BoundaryMotion(c, beta, d)
    regime = bm.regime
    if regime is Regime.SUB_CRITICAL:
        W0 = M / math.sqrt(math.pi * d)
    elif regime is Regime.CRITICAL:
        W0 = M / (math.sqrt(math.pi * d) * erfcx(c / (2.0 * math.sqrt(d))))
    else:
        W0 = M * c * beta / d
    return Profile(regime, c, beta, d, M, W0)


def physical_approximant(profile: Profile, bm: BoundaryMotion, t, x):
    """f(t) W(f(t) x): the self-similar approximation of v(t, x)."""
    if np.any(np.asarray(t) < 0) or np.any(np.asarray(x) < 0):
        raise ValueError("physical_approximant requires t, x >= 0")
    f = scaling_map(bm).amplitude(t)
    return f * profile.eval(f * np.asarray(x, dtype=float))
