import json
from pathlib import Path

import pytest

from cyldrift.cli import run_command
from cyldrift.demos import example_config
from cyldrift.io import load_json

TOY = {
    "dimension": 1,
    "cells_per_unit": 32,
    "k_sequence": [8, 12, 16, 20, 24],
    "coefficients": {"a": [1.0], "b": {"left": [1.0], "middle": [{"kind": "sign", "scale": -1.0}], "right": [-1.0]}},
    "limits": {"K_minus": -1.0, "K_plus": 1.0},
}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_demo_example2(capsys):
    assert run_command(["demo", "example2"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_demo_example1(capsys):
    assert run_command(["demo", "example1"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_demo_mismatch_returns_1(monkeypatch):
    from cyldrift import demos

    cfg = demos.example_config("example1")
    cfg["k_sequence"] = [4.0, 4.25]  # growth e^0.25 is below the required factor 2
    monkeypatch.setitem(demos.EXAMPLE_CONFIGS, "example1", cfg)
    assert run_command(["demo", "example1"]) == 1


def test_drift_and_classify(tmp_path, capsys):
    cfg = write(tmp_path, example_config("example2"))
    assert run_command(["drift", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "b_minus=-1.0" in out and "b_plus=1.0" in out
    assert run_command(["classify", "--config", cfg]) == 0
    assert "Compatibility" in capsys.readouterr().out


def test_check_compat_exit_codes(tmp_path, capsys):
    assert run_command(["check-compat", "--config", write(tmp_path, example_config("example2"))]) == 0
    assert "PASS" in capsys.readouterr().out
    bad = example_config("example2")
    bad["f"] = {"kind": "indicator", "lo": -1.0, "hi": 1.0, "value": 1.0}
    assert run_command(["check-compat", "--config", write(tmp_path, bad, "bad.json")]) == 4
    assert run_command(["solve", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 4


def test_schema_error_exit(tmp_path, capsys):
    raw = example_config("example2")
    raw["solver"] = {"schme": "upwind"}
    assert run_command(["solve", "--config", write(tmp_path, raw)]) == 2
    assert "schme" in capsys.readouterr().err
    assert run_command(["solve"]) == 2
    assert run_command(["frobnicate"]) == 2
    assert run_command(["solve", "--config", str(tmp_path / "missing.json")]) == 2


def test_not_converged_exit(tmp_path):
    raw = dict(TOY, k_sequence=[4, 6])
    assert run_command(["solve", "--config", write(tmp_path, raw), "--out", str(tmp_path / "o")]) == 5
    assert load_json(tmp_path / "o" / "result.json")["flags"]


def test_solver_failure_exit(tmp_path):
    raw = example_config("example2")
    raw["solver"] = {"method": "iterative", "max_iter": 1, "linear_tol": 1e-14}
    assert run_command(["solve", "--config", write(tmp_path, raw), "--out", str(tmp_path / "o")]) == 3


def test_solve_outputs_byte_identical(tmp_path):
    cfg = write(tmp_path, TOY)
    for d in ("a", "b"):
        assert run_command(["solve", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert {"result.json", "profile.csv", "run_meta.json"} <= set(names)
    for n in names:
        if n != "run_meta.json":
            assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes(), n
    res = load_json(tmp_path / "a" / "result.json")
    assert res["regime"]["tag"] == "TwoParameter"
    assert abs(res["limits"]["K_minus"] + 1) < 1e-2


def test_cell_adjoint_semi(tmp_path, capsys):
    cfg = write(tmp_path, dict(example_config("example2"), semi={"phi": 0.0, "K": 1.0, "k": 8}))
    out = str(tmp_path / "o")
    assert run_command(["cell", "--config", cfg, "--zone", "left", "--out", out]) == 0
    assert (Path(out) / "cell_left.csv").exists()
    assert run_command(["cell", "--config", cfg, "--zone", "right"]) == 0
    assert "# zone=right" in capsys.readouterr().out
    assert run_command(["adjoint", "--config", cfg, "--out", out]) == 0
    assert (Path(out) / "adjoint_profile.csv").exists()
    assert run_command(["semi", "--config", cfg, "--out", out]) == 0
    assert load_json(Path(out) / "semi.json")["case"]


@pytest.mark.parametrize("jobs", ["1", "2"])
def test_sweep(tmp_path, jobs):
    spec = {"template": example_config("example2"), "grid": {"cells_per_unit": [16, 32]}}
    out = tmp_path / "sw"
    assert run_command(["sweep", "--config", write(tmp_path, spec), "--out", str(out), "--jobs", jobs]) == 0
    index = load_json(out / "sweep_index.json")
    assert [r["exit_code"] for r in index] == [0, 0]
    assert (out / "point_0001" / "result.json").exists()
