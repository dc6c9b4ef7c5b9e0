import json
import subprocess
import sys

import numpy as np
import pytest

from deltaion.cli import parse_time, run
from deltaion.observables import spectrum_infinite_time
from deltaion.params import ModelParams

SPEC = ["spectrum", "--alpha", "0.5", "--omega", "1.51", "--k-points", "9"]


def _read_csv(path):
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    cols = body[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]])
    return header, cols, data


def test_spectrum_csv_is_exact_to_17_digits(tmp_path):
    out = tmp_path / "s.csv"
    assert run(SPEC + ["-o", str(out)]) == 0
    header, cols, data = _read_csv(out)
    assert cols == ["k", "re_Theta", "im_Theta", "abs_Theta_sq"]
    assert any(h.startswith("# config:") for h in header)
    ref = spectrum_infinite_time(ModelParams(0.5, 1.51), data[:, 0]).amplitude
    np.testing.assert_array_equal(data[:, 1] + 1j * data[:, 2], ref)


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(SPEC + ["-o", str(a)]) == 0
    assert run(SPEC + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_threads_do_not_change_output(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("DELTAION_THREADS", "1")
    assert run(SPEC + ["-o", str(a)]) == 0
    monkeypatch.setenv("DELTAION_THREADS", "3")
    assert run(SPEC + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    monkeypatch.setenv("DELTAION_THREADS", "zero")
    assert run(SPEC) == 2


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_config_round_trip(tmp_path, fmt):
    first, second = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
    assert run(SPEC + ["--t", "5T", "--format", fmt, "-o", str(first)]) == 0
    assert run(["--config", str(first), "--output", str(second)]) == 2  # --output is not top-level
    cfg = tmp_path / "cfg.json"
    assert run(["--config", str(first)]) == 0
    if fmt == "json":
        doc = json.loads(first.read_text())
        doc["meta"]["config"]["output"] = str(second)
        cfg.write_text(json.dumps(doc["meta"]["config"]))
        assert run(["--config", str(cfg)]) == 0
        assert json.loads(second.read_text())["data"] == doc["data"]


def test_json_structure(tmp_path):
    out = tmp_path / "r.json"
    assert run(["resonance", "--alpha", "0.5", "--omega", "1.51", "--format", "json", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"meta", "data"}
    for key in ("code_version", "command", "alpha", "omega", "method", "tolerances", "config"):
        assert key in doc["meta"]
    assert len(set(len(v) for v in doc["data"].values())) == 1


def test_time_tokens():
    assert parse_time("inf")[0] == "inf"
    assert parse_time("5T") == ("periods", 5.0)
    with pytest.raises(Exception):
        parse_time("-3")
    with pytest.raises(Exception):
        parse_time("soon")


@pytest.mark.parametrize("argv", [
    SPEC + ["--bogus", "1"],
    ["spectrum", "--alpha", "-1", "--omega", "1.51"],
    ["spectrum", "--alpha", "0.5", "--omega", "1.51", "--k-min", "3", "--k-max", "1"],
    ["spectrum", "--alph", "0.5", "--omega", "1.51"],
    ["wavefunction", "--alpha", "0.5", "--omega", "1.51", "--t", "inf"],
    [],
])
def test_configuration_errors_exit_2(argv, capsys):
    assert run(argv) == 2


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "spectrum", "alpha": 0.5, "omega": 1.51, "colour": "red"}))
    assert run(["--config", str(cfg)]) == 2


def test_solver_failure_exits_1(capsys):
    assert run(["resonance", "--alpha", "0", "--omega", "1.5"]) == 1
    assert "solver failure" in capsys.readouterr().err


def test_validate_undriven(capsys):
    assert run(["validate", "--alpha", "0", "--omega", "1.2"]) == 0
    assert "FAIL" not in capsys.readouterr().err


def test_reproduce_figure_writes_data_and_script(tmp_path):
    assert run(["reproduce-figure", "fig1", "--output-dir", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert any(n.endswith(".csv") for n in names) and "fig1.gp" in names


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "deltaion.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout
