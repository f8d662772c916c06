"""Boundary law b(t) = c((1+t)^beta - 1) and the frame maps built on it.

Two rescaled frames are used throughout the package:

* diffusive (beta <= 1/2): tau = log sqrt(1+t), y = x / sqrt(1+t),
  v = w / sqrt(1+t);
* super-critical (beta > 1/2): f(t) = b'(t)/(c beta) = (1+t)^(beta-1),
  tau = ((1+t)^(2beta-1) - 1)/(2beta - 1), y = f(t) x, v = f(t) w.

For beta = 1 the super-critical map is the identity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Regime(enum.Enum):
    SUB_CRITICAL = "sub-critical"
    CRITICAL = "critical"
    SUPER_CRITICAL = "super-critical"
    LINEAR = "linear"
    EXPLORATORY = "exploratory"

    @classmethod
    def of(cls, beta: float) -> "Regime":
        # exact comparisons: beta is user input, never computed
        if beta < 0:
            raise ValueError(f"beta must be >= 0, got {beta}")
        if beta < 0.5:
            return cls.SUB_CRITICAL
        if beta == 0.5:
            return cls.CRITICAL
        if beta < 1:
            return cls.SUPER_CRITICAL
        if beta == 1:
            return cls.LINEAR
        return cls.EXPLORATORY

    @property
    def diffusive(self) -> bool:
        return self in (Regime.SUB_CRITICAL, Regime.CRITICAL)

    @property
    def certified(self) -> bool:
        """False for beta > 1, where no convergence result is available."""
        return self is not Regime.EXPLORATORY


def _check_nonneg(name: str, value) -> None:
    if np.any(np.asarray(value) < 0):
        raise ValueError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class BoundaryMotion:
    """Wall position law with speed scale ``c``, exponent ``beta`` and diffusivity ``d``."""

    c: float
    beta: float
    d: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not self.d > 0:
            raise ValueError(f"d must be > 0, got {self.d}")

    @property
    def regime(self) -> Regime:
        return Regime.of(self.beta)

    def position(self, t):
        """b(t) = c((1+t)^beta - 1)."""
        _check_nonneg("t", t)
        t = np.asarray(t, dtype=float)
        out = self.c * np.expm1(self.beta * np.log1p(t))
        return out if out.ndim else float(out)

    def speed(self, t):
        """b'(t) = c beta (1+t)^(beta-1)."""
        _check_nonneg("t", t)
        t = np.asarray(t, dtype=float)
        out = self.c * self.beta * np.exp((self.beta - 1.0) * np.log1p(t))
        return out if out.ndim else float(out)

    def psi(self, tau):
        """Drift offset 2 c beta exp(tau (2beta - 1)) of the diffusive frame."""
        if self.beta > 0.5:
            raise ValueError("psi is defined in the diffusive frame only (beta <= 1/2)")
        _check_nonneg("tau", tau)
        tau = np.asarray(tau, dtype=float)
        out = 2.0 * self.c * self.beta * np.exp(tau * (2.0 * self.beta - 1.0))
        return out if out.ndim else float(out)

    def eta(self, tau):
        """Drift slope (beta - 1)/(1 + (2beta - 1) tau) of the super-critical frame."""
        if self.beta <= 0.5:
            raise ValueError("eta is defined in the super-critical frame only (beta > 1/2)")
        _check_nonneg("tau", tau)
        tau = np.asarray(tau, dtype=float)
        out = (self.beta - 1.0) / (1.0 + (2.0 * self.beta - 1.0) * tau)
        return out if out.ndim else float(out)

    def tau_of_t(self, t):
        return scaling_map(self).rescaled_time(t)

    def t_of_tau(self, tau):
        return scaling_map(self).physical_time(tau)


@dataclass(frozen=True)
class ScalingMap:
    """v(t, x) = f(t) w(g(t), f(t) x) for one regime."""

    regime: Regime
    beta: float

    @property
    def diffusive(self) -> bool:
        return self.beta <= 0.5

    def amplitude(self, t):
        """f(t)."""
        _check_nonneg("t", t)
        t = np.asarray(t, dtype=float)
        if self.diffusive:
            out = np.exp(-0.5 * np.log1p(t))
        else:
            out = np.exp((self.beta - 1.0) * np.log1p(t))
        return out if out.ndim else float(out)

    def rescaled_time(self, t):
        """g(t)."""
        _check_nonneg("t", t)
        t = np.asarray(t, dtype=float)
        if self.diffusive:
            out = 0.5 * np.log1p(t)
        else:
            q = 2.0 * self.beta - 1.0
            out = np.expm1(q * np.log1p(t)) / q
        return out if out.ndim else float(out)

    def physical_time(self, tau):
        """Inverse of g."""
        _check_nonneg("tau", tau)
        tau = np.asarray(tau, dtype=float)
        if self.diffusive:
            out = np.expm1(2.0 * tau)
        else:
            q = 2.0 * self.beta - 1.0
            out = np.expm1(np.log1p(q * tau) / q)
        return out if out.ndim else float(out)

    def to_rescaled(self, t: float, x, v):
        """Map a physical-frame profile (x, v) at time t to (tau, y, w)."""
        f = self.amplitude(t)
        return self.rescaled_time(t), np.asarray(x) * f, np.asarray(v) / f

    def to_physical(self, tau: float, y, w):
        """Map a rescaled profile (y, w) at time tau back to (t, x, v)."""
        t = self.physical_time(tau)
        f = self.amplitude(t)
        return t, np.asarray(y) / f, np.asarray(w) * f


def scaling_map(bm: BoundaryMotion) -> ScalingMap:
    return ScalingMap(regime=bm.regime, beta=bm.beta)

