import csv
import json

import numpy as np
import pytest

from halfline4nls.cli import (EXIT_CONFIG, EXIT_CONTRACTION, EXIT_OK, RunConfig, main, make_profile,
                              write_field_csv)
from halfline4nls.propagator import GridSpec

SMALL = ["--nx", "256", "--nt", "129"]


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    return main(["--out", str(out), *args]), out


def test_zero_profile(tmp_path):
    code, out = run(tmp_path, "--profile", "zero", *SMALL)
    assert code == EXIT_OK
    with open(out / "solution.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "x", "re", "im"]
    assert all(float(r["re"]) == 0 and float(r["im"]) == 0 for r in rows)
    assert not (out / ".lock").exists()


def test_manufactured_plug_back(tmp_path):
    code, out = run(tmp_path)
    assert code == EXIT_OK
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["plug_back"]["dirichlet"] < 1e-4
    assert diag["plug_back"]["neumann"] < 1e-4
    assert diag["manufactured_interior_error"] < 1e-4
    assert diag["mass_balance_residual"] < 1e-3


@pytest.mark.parametrize("args", [["--s", "0.7"], ["--lambda2", "0"], ["--nx", "100"], ["--lambda1", "-0.5"],
                                  ["--b", "0.6"], ["--lambda2", "1"]])
def test_config_errors(tmp_path, args):
    code, out = run(tmp_path, *args)
    assert code == EXIT_CONFIG
    record = json.loads((out / "error.json").read_text())
    assert record["exit_code"] == EXIT_CONFIG and record["message"]


def test_lockfile_blocks_second_run(tmp_path):
    out = tmp_path / "busy"
    out.mkdir()
    (out / ".lock").write_text("1")
    assert main(["--out", str(out), "--profile", "zero", *SMALL]) == EXIT_CONFIG
    assert "in use" in json.loads((out / "error.json").read_text())["message"]


def test_oversized_data_contraction_failure(tmp_path):
    code, out = run(tmp_path, "--amp", "4", "--lambda-nl", "1", *SMALL)
    assert code == EXIT_CONTRACTION
    assert json.loads((out / "error.json").read_text())["error"] == "ContractionError"


def test_artifacts_are_reproducible(tmp_path):
    args = ["--profile", "gaussian-pulse", "--lambda-nl", "1", "--amp", "0.5", *SMALL]
    assert run(tmp_path, *args, name="a")[0] == EXIT_OK
    assert run(tmp_path, *args, name="b")[0] == EXIT_OK
    for f in ("solution.csv", "traces.csv", "traces_x.csv", "diagnostics.json"):
        a = (tmp_path / "a" / f).read_bytes()
        b = (tmp_path / "b" / f).read_bytes()
        assert a.replace(b"/a", b"") == b.replace(b"/b", b""), f


def test_modulated_ramp(tmp_path):
    code, out = run(tmp_path, "--profile", "modulated-ramp", "--amp", "0.2", *SMALL)
    assert code == EXIT_OK
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["plug_back"]["dirichlet"] < 1e-3


def test_data_dir_round_trip(tmp_path):
    grid = RunConfig(nx=256, nt=129).grid
    data, _ = make_profile("manufactured-linear", grid)
    d = tmp_path / "data"
    d.mkdir()
    for name, sig in (("f", data.f), ("g", data.g)):
        with open(d / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re", "im"])
            for t, v in zip(grid.t, sig.samples):
                w.writerow([float(t), float(v.real), float(v.imag)])
    with open(d / "u0.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        for x, v in zip(grid.x, data.u0.samples):
            if x >= 0:
                w.writerow([float(x), float(v.real), float(v.imag)])
    code, out = run(tmp_path, "--data-dir", str(d), *SMALL)
    assert code == EXIT_OK
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["plug_back"]["dirichlet"] < 1e-3
    code, _ = run(tmp_path, "--data-dir", str(d), "--nt", "65", "--nx", "256", name="bad")
    assert code == EXIT_CONFIG


def test_write_field_csv(tmp_path):
    p = tmp_path / "f.csv"
    write_field_csv(p, np.array([0.0, 0.5]), np.array([1.0]), np.array([[1 + 2j], [3 - 1j]]))
    assert p.read_text().splitlines() == ["t,x,re,im", "0.0,1.0,1.0,2.0", "0.5,1.0,3.0,-1.0"]


def test_bench_rows(tmp_path, capsys):
    code, out = run(tmp_path, "--mode", "bench", *SMALL)
    assert code == EXIT_OK
    rows = json.loads((out / "bench.json").read_text())["rows"]
    assert {r["task"] for r in rows} == {"kernel_B table", "forcing_L0", "Lambda application", "picard_solve"}


def test_verify_default_and_seed_independence(tmp_path):
    code0, out0 = run(tmp_path, "--mode", "verify", "--seed", "0", name="v0")
    code1, out1 = run(tmp_path, "--mode", "verify", "--seed", "1", name="v1")
    assert code0 == EXIT_OK and code1 == EXIT_OK
    items0 = json.loads((out0 / "verify.json").read_text())["items"]
    items1 = json.loads((out1 / "verify.json").read_text())["items"]
    names = [it["name"] for it in items0]
    assert "trace lam=1 raises pole error" in names
    fixed0 = [json.dumps(it, sort_keys=True) for it in items0 if not it["name"].startswith("ratio suite")]
    fixed1 = [json.dumps(it, sort_keys=True) for it in items1 if not it["name"].startswith("ratio suite")]
    assert fixed0 == fixed1
