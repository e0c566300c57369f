import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from tbq.cli import main
from tbq.experiments import CSV_HEADER, ConfigError, ExperimentConfig, load_config, run_experiment


def write_config(path, **fields):
    base = {"task": "linear", "preset": "channel_k2", "bit_budgets": [2, 4], "runs": 2000,
            "plot": False}
    base.update(fields)
    path.write_text(json.dumps(base, indent=2))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def tbq(*args):
    return subprocess.run([sys.executable, "-m", "tbq", *args], capture_output=True, text=True)


@pytest.fixture(scope="module")
def quad_rows(tmp_path_factory):
    d = tmp_path_factory.mktemp("quad")
    cfg = write_config(d / "c.json", task="quadratic", preset="covariance_recovery",
                       bit_budgets=[6, 12, 18], runs=1000, training_samples=20_000, plot=True)
    assert main(["run", "--config", cfg, "--out", str(d / "out")]) == 0
    return d / "out", read_csv(d / "out" / "results.csv")


def test_quadratic_csv_shape(quad_rows):
    out, rows = quad_rows
    assert rows[0] == CSV_HEADER
    body = rows[1:]
    assert len(body) == 9
    assert {r[1] for r in body} == {"proposed-lloyd", "proposed-uniform", "no-combining"}
    for r in body:
        assert (r[8] != "") == r[1].startswith("proposed")
    assert (out / "plot.svg").read_text().lstrip().startswith("<?xml")


def test_numeric_fields_use_15_digits(quad_rows):
    _, rows = quad_rows
    for r in rows[1:]:
        for v in (r[6], r[7], r[8], r[9]):
            if v:
                assert f"{float(v):.15g}" == v


def test_lloyd_not_worse_than_uniform(quad_rows):
    _, rows = quad_rows
    by = {(r[1], r[2]): r for r in rows[1:]}
    for b in ("6", "12", "18"):
        assert float(by["proposed-lloyd", b][8]) <= float(by["proposed-uniform", b][8])


def test_linear_floor_constant_and_rerun_identical(tmp_path):
    cfg = write_config(tmp_path / "c.json", bit_budgets=[2, 4, 6])
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "results.csv")[1:]
    assert len({r[9] for r in rows}) == 1
    by = {(r[1], r[2]): float(r[8]) for r in rows}
    for b in ("2", "4", "6"):
        assert by["proposed-lloyd", b] <= by["proposed-uniform", b]


def test_sweep_bits_flag(tmp_path):
    cfg = write_config(tmp_path / "c.json", quantizer="uniform")
    out = tmp_path / "o"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--bits", "2,6", "--runs", "500"]) == 0
    rows = read_csv(out / "results.csv")[1:]
    assert [(r[1], r[2], r[4], r[10]) for r in rows] == [
        ("proposed-uniform", "2", "2", "500"), ("proposed-uniform", "6", "8", "500")]


def test_custom_matrices(tmp_path):
    cfg = write_config(tmp_path / "c.json", preset="custom", bit_budgets=[1],
                       matrices={"Gamma": [[1.0, 0.0]], "Sigma_x": [[4.0, 0.0], [0.0, 1.0]]},
                       runs=100_000)
    rows = run_experiment(load_config(cfg), str(tmp_path / "o"), systems=("proposed-lloyd",))
    assert rows[0][8] == pytest.approx(1.45352, abs=1e-5)
    assert abs(rows[0][6] - 1.45352) / 1.45352 < 0.02


@pytest.mark.parametrize("fields,needle", [
    ({"task": "cubic"}, "field 'task'"),
    ({"bit_budgets": []}, "field 'bit_budgets'"),
    ({"bit_budgets": [0, 2]}, "field 'bit_budgets'"),
    ({"preset": "custom"}, "field 'matrices'"),
    ({"matrices": {"Gamma": [[1]], "Sigma_x": [[1]]}}, "field 'matrices'"),
    ({"preset": "covariance_recovery"}, "field 'preset'"),
    ({"quantizer": "vq"}, "field 'quantizer'"),
    ({"runs": 5}, "field 'runs'"),
    ({"colour": "red"}, "field 'colour'"),
])
def test_config_errors(tmp_path, fields, needle):
    cfg = write_config(tmp_path / "c.json", **fields)
    with pytest.raises(ConfigError, match=needle):
        load_config(cfg)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_config_error_reports_line(tmp_path):
    cfg = write_config(tmp_path / "c.json", quantizer="vq")
    text = (tmp_path / "c.json").read_text().splitlines()
    line = next(i for i, t in enumerate(text, 1) if '"quantizer"' in t)
    with pytest.raises(ConfigError, match=f"c.json:{line}: field 'quantizer'"):
        load_config(cfg)


def test_invalid_json_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "task": "linear",\n  oops\n}')
    with pytest.raises(ConfigError, match="bad.json:3:3"):
        load_config(str(p))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


@pytest.mark.skipif(hasattr(os, "geteuid") and os.geteuid() == 0, reason="root ignores permissions")
def test_unwritable_output_exits_1_permissions(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    cfg = write_config(tmp_path / "c.json")
    assert main(["run", "--config", cfg, "--out", str(locked / "o")]) == 1


def test_unwritable_output_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    cfg = write_config(tmp_path / "c.json", runs=10**9)
    # would take hours if simulation started before the output check
    assert main(["run", "--config", cfg, "--out", str(blocker / "o")]) == 1
    assert "error" in capsys.readouterr().err


def test_quantizer_dump_subprocess():
    r = tbq("quantizer", "--levels", "2", "--dist", "gaussian")
    assert r.returncode == 0
    lines = r.stdout.splitlines()
    assert lines[0] == "levels: -0.797884560802865 0.797884560802865"
    assert lines[1] == "boundaries: 0"
    assert abs(float(lines[2].split()[1]) - (1 - 2 / np.pi)) < 1e-12
    assert tbq("quantizer", "--levels", "0").returncode == 2
    assert tbq("quantizer").returncode == 2


def test_quantizer_uniform(capsys):
    assert main(["quantizer", "--levels", "4", "--kind", "uniform"]) == 0
    out = capsys.readouterr().out
    levels = np.array(out.splitlines()[0].split()[1:], dtype=float)
    np.testing.assert_allclose(np.diff(levels), np.diff(levels)[0], rtol=1e-12)


def test_hist_quadratic(tmp_path):
    cfg = write_config(tmp_path / "c.json", task="quadratic", preset="covariance_recovery",
                       bit_budgets=[6])
    out = tmp_path / "h"
    assert main(["hist", "--config", cfg, "--out", str(out), "--draws", "200000"]) == 0
    svgs = sorted(p.name for p in out.glob("*.svg"))
    assert svgs == [f"hist_branch_{p}.svg" for p in range(1, 7)]
    moments = read_csv(out / "hist_moments.csv")[1:]
    assert all(float(r[4]) > 10 * float(r[5]) for r in moments)
    first = (out / "hist_branch_1.svg").read_bytes()
    assert main(["hist", "--config", cfg, "--out", str(out), "--draws", "200000"]) == 0
    assert (out / "hist_branch_1.svg").read_bytes() == first


def test_hist_linear_branches_gaussian(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    assert main(["hist", "--config", cfg, "--out", str(tmp_path / "h"), "--draws", "400000"]) == 0
    moments = read_csv(tmp_path / "h" / "hist_moments.csv")[1:]
    assert len(moments) == 2
    for r in moments:
        assert abs(float(r[2]) - 1.0) < 0.01
        assert abs(float(r[4])) < 3 * float(r[5])


def test_config_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.json"))
    assert isinstance(cfg, ExperimentConfig)
    assert cfg.P is None and cfg.seed == 0 and cfg.training_samples == 1_000_000
