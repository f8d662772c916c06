"""Flat ``key = value`` experiment configuration with strict, typed validation.

Lines are ``key = value``; ``#`` starts a comment; lists are comma separated.
Every key must be known, and errors name the offending field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .kernels import CompactInitialData

MODES = ("solve", "kernel", "particles", "rates", "verify")
INIT_KINDS = ("indicator", "gaussian-bump", "tabulated")
U64_MAX = 2 ** 64 - 1


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str | None = None
    c: float = 1.0
    beta: float = 0.5
    d: float = 1.0
    M: float = 1.0
    init: str = "indicator"
    init_x0: float = 0.0
    init_x1: float = 1.0
    init_center: float = 1.0
    init_width: float = 0.25
    init_file: str | None = None
    N: int = 4096
    L: float | None = None
    t_end: float | None = None
    tau_end: float | None = None
    snapshots: list[float] | None = None
    snapshot_count: int = 60
    seed: int = 0
    out: str = "movingwall-out"
    betas: list[float] | None = None
    particles: int = 100_000
    dt: float | None = None
    start: float = 0.0
    trajectories: int = 8
    hist_bins: int = 256
    hist_length: float | None = None
    workers: int = 1
    explicit: frozenset = field(default=frozenset(), repr=False, compare=False)
    source: Path | None = field(default=None, repr=False, compare=False)

    def initial_data(self) -> CompactInitialData:
        if self.init == "indicator":
            return CompactInitialData.indicator(self.init_x0, self.init_x1, mass=self.M)
        if self.init == "gaussian-bump":
            return CompactInitialData.gaussian_bump(self.init_center, self.init_width, mass=self.M)
        path = Path(self.init_file)
        if not path.is_absolute() and self.source is not None:
            path = self.source.parent / path
        if not path.exists():
            raise ConfigError(f"init_file: file not found: {path}")
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        except ValueError:
            data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#", skiprows=1)
        if data.shape[1] < 2:
            raise ConfigError(f"init_file: expected two columns x,v in {path}")
        raw = CompactInitialData.tabulated(data[:, 0], data[:, 1])
        if "M" not in self.explicit:
            return raw
        return CompactInitialData.tabulated(data[:, 0], data[:, 1] * (self.M / raw.mass))


_KINDS = {f.name: f.type for f in fields(ExperimentConfig) if f.name not in ("explicit", "source")}


def _number(key: str, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite, got {text!r}")
    return v


def _integer(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    v = _number(key, text)
    if v != int(v):
        raise ConfigError(f"{key}: expected an integer, got {text!r}")
    return int(v)


def _convert(key: str, text: str) -> Any:
    kind = _KINDS[key]
    if "list" in kind:
        items = [s.strip() for s in text.split(",") if s.strip()]
        if not items:
            raise ConfigError(f"{key}: expected a comma-separated list of numbers")
        return [_number(key, s) for s in items]
    if kind.startswith("int"):
        return _integer(key, text)
    if kind.startswith("float"):
        return _number(key, text)
    return text


def parse(text: str, source: Path | None = None) -> ExperimentConfig:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KINDS:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        if key in values:
            raise ConfigError(f"{key}: given more than once (line {lineno})")
        if not value:
            raise ConfigError(f"{key}: empty value (line {lineno})")
        values[key] = _convert(key, value)
    cfg = ExperimentConfig(**values, explicit=frozenset(values), source=source)
    validate(cfg)
    return cfg


def load(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config: file not found: {path}")
    return parse(path.read_text(), source=path)


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {message}")


def validate(cfg: ExperimentConfig, mode: str | None = None) -> ExperimentConfig:
    """Check ranges, and the fields the mode needs when ``mode`` (or cfg.mode) is set."""
    if cfg.mode is not None:
        _require(cfg.mode in MODES, "mode", f"must be one of {', '.join(MODES)}, got {cfg.mode!r}")
    for key in ("c", "d", "M"):
        _require(getattr(cfg, key) > 0, key, f"must be > 0, got {getattr(cfg, key)!r}")
    _require(cfg.beta >= 0, "beta", f"must be >= 0, got {cfg.beta!r}")
    _require(cfg.init in INIT_KINDS, "init", f"must be one of {', '.join(INIT_KINDS)}, got {cfg.init!r}")
    _require(0 <= cfg.init_x0 < cfg.init_x1, "init_x1", "indicator needs 0 <= init_x0 < init_x1")
    _require(cfg.init_width > 0, "init_width", "must be > 0")
    _require(cfg.init_center >= 0, "init_center", "must be >= 0")
    if cfg.init == "tabulated":
        _require(cfg.init_file is not None, "init_file", "required when init = tabulated")
    _require(cfg.N >= 16, "N", f"grid needs at least 16 cells, got {cfg.N}")
    for key in ("L", "t_end", "tau_end", "dt", "hist_length"):
        v = getattr(cfg, key)
        _require(v is None or v > 0, key, f"must be > 0, got {v!r}")
    _require(cfg.t_end is None or cfg.tau_end is None, "tau_end", "give either t_end or tau_end, not both")
    if cfg.snapshots is not None:
        s = cfg.snapshots
        _require(all(v > 0 for v in s), "snapshots", "times must be > 0")
        _require(all(b > a for a, b in zip(s, s[1:])), "snapshots", "times must be strictly increasing")
    _require(cfg.snapshot_count >= 1, "snapshot_count", "must be >= 1")
    _require(0 <= cfg.seed <= U64_MAX, "seed", "must be an unsigned 64-bit integer")
    if cfg.betas is not None:
        _require(all(b >= 0 for b in cfg.betas), "betas", "every beta must be >= 0")
    _require(cfg.particles >= 2, "particles", "need at least 2 particles")
    _require(cfg.start >= 0, "start", "must be >= 0")
    _require(cfg.trajectories >= 0, "trajectories", "must be >= 0")
    _require(cfg.hist_bins >= 16, "hist_bins", "must be >= 16")
    _require(cfg.workers >= 1, "workers", "must be >= 1")

    mode = mode or cfg.mode
    if mode in ("solve", "kernel", "particles"):
        _require(cfg.t_end is not None or cfg.tau_end is not None or cfg.snapshots is not None,
                 "t_end", f"mode {mode} needs a horizon (t_end or tau_end)")
    if mode in ("kernel", "particles"):
        _require(cfg.tau_end is None, "tau_end", f"mode {mode} runs in physical time; use t_end")
    if mode == "kernel" and "beta" in cfg.explicit:
        _require(cfg.beta == 1.0, "beta", "kernel mode tabulates the linear regime (beta = 1)")
    if mode == "rates":
        _require(cfg.betas is not None, "betas", "mode rates needs a beta list")
        _require(cfg.t_end is not None, "t_end", "mode rates needs t_end")
    return cfg
