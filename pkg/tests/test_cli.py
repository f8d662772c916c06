import csv
import json
import math
import warnings
from pathlib import Path

import numpy as np
import pytest

from movingwall import cli, io
from movingwall.config import ConfigError, load, parse, validate
from movingwall.fv import DensityField, Grid
from movingwall.svg import line_plot

SOLVE = """\
# small sub-critical run
mode = solve
c = 1
beta = 0.25
N = 256
tau_end = 2
snapshot_count = 8
"""

SWEEP = """\
mode = rates
betas = 0, 0.25, 0.5, 0.75, 1
N = 256
t_end = 20
snapshot_count = 40
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_types_and_comments():
    cfg = parse("beta = 0.75  # super-critical\nN = 512\nbetas = 0, 0.5,1\nsnapshots = 1, 2.5\n")
    assert cfg.beta == 0.75 and cfg.N == 512
    assert cfg.betas == [0.0, 0.5, 1.0] and cfg.snapshots == [1.0, 2.5]
    assert cfg.explicit == {"beta", "N", "betas", "snapshots"}


@pytest.mark.parametrize("text,field", [
    ("gamma = 1\n", "gamma"),
    ("beta = -1\n", "beta"),
    ("beta = 1\nbeta = 2\n", "beta"),
    ("N = 12.5\n", "N"),
    ("c =\n", "c"),
    ("d = zero\n", "d"),
    ("snapshots = 2, 1\n", "snapshots"),
    ("t_end = 1\ntau_end = 1\n", "tau_end"),
    ("init = tabulated\n", "init_file"),
    ("seed = 18446744073709551616\n", "seed"),
])
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse(text)
    assert str(info.value).startswith(f"{field}:")


def test_mode_requirements():
    with pytest.raises(ConfigError, match="^t_end:"):
        validate(parse("beta = 1\n"), "solve")
    with pytest.raises(ConfigError, match="^betas:"):
        validate(parse("t_end = 5\n"), "rates")
    with pytest.raises(ConfigError, match="^beta:"):
        validate(parse("beta = 0.5\nt_end = 1\n"), "kernel")
    with pytest.raises(ConfigError, match="^tau_end:"):
        validate(parse("tau_end = 1\n"), "particles")


def test_missing_files(tmp_path):
    with pytest.raises(ConfigError, match="^config: file not found"):
        load(tmp_path / "nope.cfg")
    cfg = load(write(tmp_path, "init = tabulated\ninit_file = data.csv\nt_end = 1\n"))
    with pytest.raises(ConfigError, match="^init_file: file not found"):
        cfg.initial_data()


def test_tabulated_initial_data_relative_to_config(tmp_path):
    (tmp_path / "data.csv").write_text("x,v\n0,0\n1,2\n2,0\n")
    cfg = load(write(tmp_path, "init = tabulated\ninit_file = data.csv\nt_end = 1\n"))
    assert cfg.initial_data().mass == pytest.approx(2.0)
    cfg = load(write(tmp_path, "init = tabulated\ninit_file = data.csv\nM = 3\nt_end = 1\n", "b.cfg"))
    assert cfg.initial_data().mass == pytest.approx(3.0)


def test_main_reports_config_errors(tmp_path, capsys):
    rc = cli.main(["solve", "--config", str(write(tmp_path, "beta = -1\ntau_end = 1\n"))])
    assert rc == 2
    assert "beta: must be >= 0" in capsys.readouterr().err
    assert cli.main(["solve"]) == 2
    assert cli.main(["kernel", "--config", str(write(tmp_path, SOLVE, "s.cfg"))]) == 2


def test_solve_writes_outputs(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["solve", "--config", str(write(tmp_path, SOLVE)), "--out", str(out)])
    assert rc == 0
    assert sorted(p.name for p in out.iterdir()) == ["density.svg", "diagnostics.csv", "distance.svg",
                                                      "snapshots.csv"]
    diag = read_csv(out / "diagnostics.csv")
    assert tuple(diag[0]) == io.DIAGNOSTICS_HEADER and len(diag) == 9
    snaps = io.read_snapshots(out / "snapshots.csv")
    assert len(snaps) == 8 and snaps[-1][0] == 2.0
    tau, t, y, w = snaps[-1]
    assert (y[1] - y[0]) * w.sum() == pytest.approx(1.0, rel=1e-9)
    l1 = np.array([float(r[3]) for r in diag[1:]])
    assert np.all(np.diff(l1) < 0)
    assert (out / "density.svg").read_text().startswith("<svg")


def test_output_root_precedence(tmp_path, monkeypatch):
    cfg_path = write(tmp_path, SOLVE + f"out = {tmp_path / 'from_cfg'}\n")
    monkeypatch.setenv("MOVINGWALL_OUT", str(tmp_path / "from_env"))
    assert cli.main(["solve", "--config", str(cfg_path)]) == 0
    assert (tmp_path / "from_env" / "snapshots.csv").exists()
    assert not (tmp_path / "from_cfg").exists()
    assert cli.main(["solve", "--config", str(cfg_path), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "snapshots.csv").exists()
    monkeypatch.delenv("MOVINGWALL_OUT")
    cfg = load(cfg_path)
    assert cli.output_root(cfg, None) == tmp_path / "from_cfg"


def test_kernel_mode(tmp_path):
    cfg = write(tmp_path, "N = 64\nL = 8\nsnapshots = 0.5, 1\n")
    assert cli.main(["kernel", "--config", str(cfg), "--out", str(tmp_path / "k")]) == 0
    rows = read_csv(tmp_path / "k" / "kernel.csv")
    assert rows[0] == ["t", "x", "v"] and len(rows) == 1 + 2 * 64
    v = np.array([float(r[2]) for r in rows[65:]])
    assert 8 / 64 * v.sum() == pytest.approx(1.0, abs=1e-3)


def test_particles_mode(tmp_path):
    cfg = write(tmp_path, "beta = 1\nparticles = 2000\nt_end = 2\nsnapshot_count = 4\ntrajectories = 3\n"
                          "hist_length = 20\n")
    assert cli.main(["particles", "--config", str(cfg), "--out", str(tmp_path / "p"), "--seed", "7"]) == 0
    traj = read_csv(tmp_path / "p" / "trajectories.csv")
    assert traj[0] == list(io.TRAJECTORY_HEADER) and len(traj) == 1 + 3 * 5
    assert all(float(z) >= float(t) for t, _, z in traj[1:])
    hist = read_csv(tmp_path / "p" / "histogram.csv")
    assert len(hist) == 1 + 256
    first = (tmp_path / "p" / "trajectories.csv").read_bytes()
    cli.main(["particles", "--config", str(cfg), "--out", str(tmp_path / "p"), "--seed", "7"])
    assert (tmp_path / "p" / "trajectories.csv").read_bytes() == first


def test_rates_sweep(tmp_path):
    cfg = load(write(tmp_path, SWEEP))
    rows, failures = cli.sweep(cfg, cfg.betas, tmp_path)
    assert not failures
    assert [r[0] for r in rows] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert [r[2] for r in rows] == [-0.5, -0.125, -0.5, -0.25, -0.5]
    assert all(math.isfinite(r[1]) for r in rows)
    csv_rows = read_csv(tmp_path / "rates.csv")
    assert tuple(csv_rows[0]) == io.SWEEP_HEADER and len(csv_rows) == 6
    records = [json.loads(line) for line in (tmp_path / "rates.jsonl").read_text().splitlines()]
    assert [r["beta"] for r in records] == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_sweep_deduplicates_and_isolates_failures(tmp_path, monkeypatch):
    cfg = load(write(tmp_path, SWEEP.replace("0, 0.25, 0.5, 0.75, 1", "0.5, 0.25, 0.5")))
    real = cli.solve

    def flaky(bm, *args, **kwargs):
        if bm.beta == 0.25:
            raise RuntimeError("injected")
        return real(bm, *args, **kwargs)

    monkeypatch.setattr(cli, "solve", flaky)
    with pytest.warns(UserWarning, match="duplicate beta"):
        rows, failures = cli.sweep(cfg, cfg.betas, tmp_path)
    assert [r[0] for r in rows] == [0.5, 0.25]
    assert failures == [(0.25, "RuntimeError: injected")]
    assert math.isnan(rows[1][1]) and math.isfinite(rows[0][1])
    with pytest.raises(ConfigError):
        cli.sweep(cfg, [], tmp_path)


def test_rates_mode_exit_status(tmp_path, capsys):
    cfg = write(tmp_path, SWEEP.replace("0, 0.25, 0.5, 0.75, 1", "0.5"))
    assert cli.main(["rates", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
    assert "0.5" in capsys.readouterr().out


def test_fmt_round_trips_doubles():
    for x in (0.1, 1 / 3, math.pi * 1e-300, 5e-324, 1.7976931348623157e308):
        assert float(io.fmt(x)) == x
    assert io.fmt(3) == "3" and io.fmt(True) == "true" and io.fmt(math.nan) == "nan"
    assert io.fmt(0.1) == "0.10000000000000001"


def test_snapshot_round_trip(tmp_path):
    g = Grid(32, 4.0)
    f = DensityField(g, np.linspace(1.0, 0.0, 32) ** 2)
    io.write_rows(tmp_path / "s.csv", io.SNAPSHOT_HEADER, io.snapshot_rows(0.5, 1.25, f))
    (tau, t, y, w), = io.read_snapshots(tmp_path / "s.csv")
    assert (tau, t) == (0.5, 1.25)
    np.testing.assert_array_equal(y, g.centers)
    np.testing.assert_array_equal(w, f.w)


def test_svg_writer(tmp_path):
    x = np.linspace(0.0, 3.0, 50)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        line_plot(tmp_path / "a.svg", [("exp", x, np.exp(-x)), ("zero", x, np.zeros_like(x))], title="a & b",
                  logy=True)
    text = (tmp_path / "a.svg").read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polyline") == 1
    assert "a &amp; b" in text


def test_shipped_configs_are_valid():
    shipped = sorted((Path(__file__).parent.parent / "configs").glob("*.cfg"))
    assert shipped
    for path in shipped:
        cfg = load(path)
        validate(cfg, cfg.mode)
