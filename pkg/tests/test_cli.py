import json
import os
import subprocess
import sys

import pytest

from artifact.cli import parse_program, run
from artifact.reporting import OUT_DIR_ENV, report_body


def _report(out, name):
    return json.loads((out / name).read_text())


def test_threshold_analytic(tmp_path, capsys):
    assert run(["--out", str(tmp_path), "threshold", "analytic", "--A", "100", "--k", "1", "--eta", "1e-4"]) == 0
    rep = _report(tmp_path, "threshold-analytic.json")
    assert rep["results"]["eta_c"] == pytest.approx(1 / 4950)
    assert rep["config"]["A"] == 100 and rep["seed"] is not None
    assert (tmp_path / "threshold.csv").read_text().startswith("level,effective_rate,sparse_prob_bound")


def test_mc_report_reproducible(tmp_path):
    args = ["threshold", "mc", "--A", "20", "--eta", "0.01", "--r", "1", "--trials", "5000", "--seed", "9"]
    assert run(["--out", str(tmp_path / "a")] + args) == 0
    assert run(["--out", str(tmp_path / "b")] + args + ["--jobs", "2"]) == 0
    a = report_body(_report(tmp_path / "a", "threshold-mc.json"))
    b = report_body(_report(tmp_path / "b", "threshold-mc.json"))
    assert a == b
    assert a["seed"] == 9


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env"))
    assert run(["univcheck", "--p", "5", "--n-max", "50"]) == 0
    assert (tmp_path / "env" / "univcheck.json").exists()


def test_bad_config_exits_2(tmp_path, capsys):
    assert run(["--out", str(tmp_path), "code", "build", "--code", "poly", "--p", "11"]) == 2
    assert run(["--out", str(tmp_path), "code", "build", "--code", "poly", "--p", "5", "--d", "3"]) == 2
    assert run(["--out", str(tmp_path)]) == 2


def test_unwritable_out_exits_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(["--out", str(blocker / "sub"), "univcheck", "--n-max", "10"]) == 2


def test_help_schema(capsys):
    assert run(["--help-schema"]) == 0
    out = capsys.readouterr().out
    assert "schema_version" in out and "threshold-mc" in out


def test_code_build_and_check(tmp_path):
    assert run(["--out", str(tmp_path), "code", "build", "--code", "steane"]) == 0
    assert (tmp_path / "code.txt").read_text().startswith("css-F2")
    assert run(["--out", str(tmp_path), "code", "check", "--code", "poly", "--p", "5", "--d", "1"]) == 0
    assert _report(tmp_path, "code-check.json")["results"]


def test_gadget_verify_and_spread(tmp_path):
    assert run(["--out", str(tmp_path), "gadget", "verify", "--gadget", "cnot"]) == 0
    assert run(["--out", str(tmp_path), "gadget", "spread", "--gadget", "h", "--max-l", "1"]) == 0
    assert (tmp_path / "spread.csv").exists()


def test_compile_and_route(tmp_path):
    assert run(["--out", str(tmp_path), "compile", "--program", "cnot 0 1", "--no-ec"]) == 0
    assert (tmp_path / "compiled.txt").exists()
    assert run(["--out", str(tmp_path), "route", "--program", "cnot 0 3", "--wires", "4", "--verify"]) == 0
    rows = (tmp_path / "route.csv").read_text().splitlines()
    assert rows[0] == "gate,targets,span,swaps" and rows[1].endswith(",3,4")


def test_parse_program():
    circ = parse_program("h 0; cnot 0 1; gnot(2) 1", 3, 2)
    assert [g.name for _, g in circ.gates()] == ["h", "cnot", "gnot"]


def test_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "artifact.cli", "--out", str(tmp_path), "univcheck", "--n-max", "20"],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "passed" in res.stdout
