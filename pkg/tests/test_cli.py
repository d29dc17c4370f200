import json
import math
import subprocess
import sys

import pytest

from bkflow import __version__
from bkflow.cli import main, run

BARRIER = {"sites": [-1, 1], "values": [3.0, 3.0]}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_bk_zero_potential(tmp_path, capsys):
    cfg = write(tmp_path, {"model": {"sites": [], "values": []}, "params": {"lambda": 0.5}})
    assert main(["verify-bk", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert set(rep) == {"version", "config", "verdict", "data"}
    assert rep["version"] == {"schema": 1, "bkflow": __version__}
    assert rep["data"]["runs"][0]["defect_mod1"] == 0
    assert "verify-bk: pass" in capsys.readouterr().out


def test_e1_no_crossing_passes(tmp_path):
    cfg = {"model": BARRIER, "params": {"lambda1": -0.5, "lambda2": -0.1}}
    status, rep = run(cfg, "verify-e1", out=tmp_path)
    assert status == 0
    assert rep["data"]["delta_xi"] == 0 == -rep["data"]["flow"]


def test_e1_hypothesis_violation_is_status_2(tmp_path):
    cfg = {"model": BARRIER, "params": {"lambda1": -0.5, "lambda2": 0.6}}
    status, rep = run(cfg, "verify-e1", out=tmp_path)
    assert status == 2 and rep["verdict"] == "indeterminate"


def test_lambda_outside_band(tmp_path, capsys):
    cfg = write(tmp_path, {"model": {"sites": [0], "values": [1.0]}, "params": {"lambda": 3}})
    assert main(["verify-bk", "--config", cfg, "--out", str(tmp_path / "o")]) == 64
    assert "λ outside open band (−2,2)" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "model": {"sites": [0],\n  "values": [1.0]\n')
    assert main(["verify-bk", "--config", str(path)]) == 64
    assert "line" in capsys.readouterr().err


@pytest.mark.parametrize("cfg,needle", [
    ({"model": {"type": "nope"}}, "model.type"),
    ({"model": {"sites": [1, 0], "values": [1, 1]}, "params": {"lambda": 0.1}}, "strictly increasing"),
    ({"model": BARRIER, "params": {}}, "params.lambda: required"),
    ({"model": BARRIER, "params": {"lambda": "x"}}, "expected float"),
    ({"model": BARRIER, "params": {"lambda": 0.1}, "seed": -1}, "seed"),
    ({"command": "flow", "model": BARRIER, "params": {"lambda": 0.1}}, "invoked as"),
])
def test_config_errors(tmp_path, capsys, cfg, needle):
    status, rep = run(cfg, "verify-bk", out=tmp_path)
    assert status == 64 and rep is None
    assert needle in capsys.readouterr().err


def test_override_and_seed(tmp_path):
    base = {"seed": 1, "model": {"type": "random", "count": 2, "dim": 6, "rank": 2},
            "params": {"probes": 5}}
    cfg = write(tmp_path, base)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["index", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["index", "--config", cfg, "--out", str(out2), "--seed", "2",
                 "--override", "params.probes=7"]) == 0
    r1 = json.loads((out1 / "report.json").read_text())
    r2 = json.loads((out2 / "report.json").read_text())
    assert r1["config"]["seed"] == 1 and r2["config"]["seed"] == 2
    assert r2["config"]["params"]["probes"] == 7
    assert (out1 / "index.csv").read_text() != (out2 / "index.csv").read_text()
    assert main(["index", "--config", cfg, "--override", "noequals"]) == 64


def test_flow_csv_columns(tmp_path):
    cfg = {"model": {"type": "phases", "slopes": [math.pi, 1.0], "offsets": [0.0, 0.2]},
           "params": {"a": 0.0, "b": 2.0, "expected": 1}}
    status, rep = run(cfg, "flow", out=tmp_path)
    assert status == 0
    header = (tmp_path / "flow.csv").read_text().splitlines()[0]
    assert header == "lambda,phase_1,phase_2"


def test_flow_expected_mismatch_fails(tmp_path):
    cfg = {"model": {"type": "phases"}, "params": {"a": 0.0, "b": 2.0, "expected": 0}}
    status, rep = run(cfg, "flow", out=tmp_path)
    assert status == 1 and rep["data"]["flow"]["flow"] == 1


def test_scatter_and_ssf_lattice(tmp_path):
    status, rep = run({"model": BARRIER, "params": {"points": 41}}, "scatter", out=tmp_path / "s")
    assert status == 0 and rep["data"]["potentials"][0]["unitarity_defect"] < 1e-10
    cfg = {"model": {"sites": [0], "values": [-3.0]}, "params": {"lambdas": [-3.0], "L": 400}}
    status, rep = run(cfg, "ssf", out=tmp_path / "f")
    assert status == 0 and rep["data"]["values"] == [[-3.0, -1.0]]


def test_thm0_csv_and_hashes(tmp_path):
    cfg = {"model": {"sites": [], "values": []}, "params": {"lambda": 0.5, "L_sweep": [200]}}
    status, rep = run(cfg, "verify-thm0", out=tmp_path)
    assert status == 0
    assert len(rep["data"]["per_L"][0]["sha256"]) == 64
    lines = (tmp_path / "verify-thm0.csv").read_text().splitlines()
    assert lines[0] == "L,index,value" and len(lines) == 1 + 401


def test_sweep_checks_jumps(tmp_path):
    cfg = {"model": BARRIER, "params": {"a": -1.2, "b": -0.3, "points": 2}}
    status, rep = run(cfg, "sweep", out=tmp_path)
    assert status == 0
    assert rep["data"]["checks"] == [{"lambda1": -1.2, "lambda2": -0.3, "flow": 1, "match": True}]


def test_console_script_entry(tmp_path):
    cfg = write(tmp_path, {"model": {"sites": [], "values": []}, "params": {"lambda": 0.5}})
    proc = subprocess.run([sys.executable, "-m", "bkflow.cli", "verify-bk", "--config", cfg,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "bkflow.cli", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 64
