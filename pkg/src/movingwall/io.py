"""CSV and JSON-lines writers. Floats are written with 17 significant digits."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diagnostics import RateFit
from .fv import DensityField, Snapshot

SNAPSHOT_HEADER = ("tau", "t", "y", "w")
DIAGNOSTICS_HEADER = ("tau", "t", "mass", "l1_to_profile", "entropy", "fisher", "first_moment",
                      "boundary_value", "ck_slack", "lsi_slack")
TRAJECTORY_HEADER = ("t", "particle_id", "z")
SWEEP_HEADER = ("beta", "fitted_exponent", "theory_exponent", "prefactor", "r2")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([fmt(v) for v in row])
    return path


def snapshot_rows(tau: float, t: float, field: DensityField):
    for y, w in zip(field.grid.centers, field.w):
        yield (tau, t, y, w)


def write_snapshots(path: Path, snapshots: Iterable[Snapshot]) -> Path:
    rows = (row for s in snapshots for row in snapshot_rows(s.tau, s.t, s.field))
    return write_rows(path, SNAPSHOT_HEADER, rows)


def read_snapshots(path: Path) -> list[tuple[float, float, np.ndarray, np.ndarray]]:
    """Blocks (tau, t, y, w) back from a snapshot CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    blocks = []
    if data.size == 0:
        return blocks
    starts = np.flatnonzero(np.r_[True, np.diff(data[:, 0]) != 0])
    ends = np.r_[starts[1:], len(data)]
    for a, b in zip(starts, ends):
        blocks.append((data[a, 0], data[a, 1], data[a:b, 2], data[a:b, 3]))
    return blocks


def rate_record(beta: float, fit: RateFit, theory: float) -> dict:
    return {"beta": beta, "model": fit.model, "exponent": fit.exponent, "prefactor": fit.prefactor,
            "r2": fit.r2, "log_corrected": fit.log_corrected, "t_min": fit.t_min, "t_max": fit.t_max,
            "samples": fit.samples, "theory_exponent": theory}


def write_jsonl(path: Path, records: Iterable[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return path
