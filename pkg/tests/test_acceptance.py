"""Acceptance criteria 1-10, one test each, at the published tolerances.

The whole verify suite runs twice into the same directory with the same seed.
The first pass goes through the command line; the second is compared against
it byte for byte.
"""
from pathlib import Path

import pytest

from movingwall import cli
from movingwall.acceptance import run_suite

SEED = 0


def _csv_bytes(out: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}


@pytest.fixture(scope="session")
def verify_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    rc = cli.main(["verify", "--out", str(out), "--seed", str(SEED)])
    first = _csv_bytes(out)
    checks = run_suite(out, SEED, log=None)
    return {"rc": rc, "first": first, "second": _csv_bytes(out), "checks": {c.number: c for c in checks}}


def _criterion(verify_runs, criterion_log, number):
    chk = verify_runs["checks"][number]
    line = chk.line()
    print(line)
    criterion_log.append(line)
    return chk


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(verify_runs, criterion_log, number):
    chk = _criterion(verify_runs, criterion_log, number)
    assert chk.passed, chk.detail


def test_criterion_10_determinism(verify_runs, criterion_log):
    chk = _criterion(verify_runs, criterion_log, 10)
    first, second = verify_runs["first"], verify_runs["second"]
    assert sorted(first) == sorted(second)
    changed = [name for name in first if first[name] != second[name]]
    assert not changed, f"CSV outputs differ between runs: {changed}"
    assert chk.passed, chk.detail


def test_verify_exit_status(verify_runs):
    all_passed = all(c.passed for c in verify_runs["checks"].values())
    assert verify_runs["rc"] == (0 if all_passed else 1)
