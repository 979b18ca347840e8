import json
import subprocess
import sys

import numpy as np
import pytest

from hlsim import ConvergenceError, ValidationError, read_csv, write_table
from hlsim import cli
from hlsim.io import config_hash, format_number, render_csv
from hlsim.cli import parse_dims, parse_grid, run_cli

OBS_KEYS = {"flux", "coherence", "peak_omega", "linewidth_gap", "linewidth_flux", "mandel_q", "mu",
            "flags"}


def test_observables_json_schema(tmp_path):
    out = tmp_path / "obs.json"
    code = run_cli(["observables", "--family", "lambda", "--param", "0.5", "--dim", "200",
                    "--format", "json", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"meta", "rows"}
    assert set(doc["rows"][0]) == OBS_KEYS
    assert doc["rows"][0]["mandel_q"] == pytest.approx(-0.5, abs=0.02)
    assert {"version", "config_hash", "timestamp", "config", "command"} <= set(doc["meta"])


def test_sweep_param_csv_header(tmp_path):
    out = tmp_path / "fig2d.csv"
    assert run_cli(["sweep-param", "--family", "q", "--dim", "1000", "--grid", "-1:0:0.1",
                    "--out", str(out)]) == 0
    lines = out.read_bytes().split(b"\r\n")
    assert lines[0] == b"param,coh_ratio,mandel_q,coh,flux,flags"
    rows = read_csv(out)
    assert len(rows) == 11
    assert rows[-1]["param"] == 0.0 and rows[-1]["coh_ratio"] == 1.0


def test_fit_reports_fourth_power(tmp_path):
    out = tmp_path / "fit.csv"
    assert run_cli(["fit", "--family", "lambda", "--param", "0", "--dims", "50,100,200,400,800",
                    "--out", str(out)]) == 0
    (row,) = read_csv(out)
    assert row["exponent"] == pytest.approx(4.0, abs=0.1)
    assert row["point_count"] == 5


@pytest.mark.parametrize("argv", [
    ["observables", "--dim", "100", "--bogus"],
    ["frobnicate"],
    ["observables", "--dim", "1"],
    ["observables", "--family", "q", "--param", "-1.5", "--dim", "50"],
    ["sweep-param", "--family", "lambda", "--dim", "50", "--grid", "0:-1:0.1"],
    ["sweep-param", "--family", "lambda", "--dim", "50", "--grid", "0:1"],
    ["sweep-dim", "--dims", "100,50"],
    ["oracle", "--dim", "20"],
    ["observables"],
])
def test_validation_exit_code(argv, capsys):
    assert run_cli(argv) == 2
    assert capsys.readouterr().err


def test_unwritable_path_exit_code(tmp_path):
    target = tmp_path / "missing" / "out.csv"
    assert run_cli(["steady", "--dim", "5", "--out", str(target)]) == 3


def test_numerical_failure_exit_code(monkeypatch):
    def boom(model, *args, **kwargs):
        raise ConvergenceError("injected", 1.0, 200)

    monkeypatch.setattr(cli, "beam_observables", boom)
    assert run_cli(["observables", "--dim", "40"]) == 3


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"family": "q", "param": -0.5, "dim": 40}))
    assert run_cli(["observables", "--config", str(cfg), "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["meta"]["config"]["family"] == "q"
    assert doc["rows"][0]["flags"] == ["approximate-generator"]
    assert run_cli(["observables", "--config", str(cfg), "--family", "lambda", "--format",
                    "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["meta"]["config"]["family"] == "lambda" and doc["meta"]["config"]["dim"] == 40
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run_cli(["observables", "--config", str(cfg)]) == 2


def test_outputs_are_deterministic(tmp_path, capsys):
    argv = ["sweep-dim", "--family", "q", "--param", "-0.5", "--dims", "20,40", "--format", "json"]
    assert run_cli(argv) == 0
    first = json.loads(capsys.readouterr().out)
    assert run_cli(argv) == 0
    second = json.loads(capsys.readouterr().out)
    assert first["meta"]["config_hash"] == second["meta"]["config_hash"]
    strip = [{k: v for k, v in r.items() if k != "runtime_ms"} for r in first["rows"]]
    assert strip == [{k: v for k, v in r.items() if k != "runtime_ms"} for r in second["rows"]]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_cli(["spectrum", "--dim", "30", "--out", str(a)])
    run_cli(["spectrum", "--dim", "30", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("command", ["steady", "spectrum", "correlations", "oracle", "condition4"])
def test_remaining_commands_run(command, capsys):
    extra = {"steady": ["--dim", "6"], "spectrum": ["--dim", "20"],
             "correlations": ["--dim", "20", "--kind", "g2"], "oracle": ["--dim", "6"],
             "condition4": ["--dims", "16,32"]}[command]
    assert run_cli([command] + extra) == 0
    out = capsys.readouterr().out
    assert out.count("\r\n") >= 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hlsim", "steady", "--dim", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "n,prob,ansatz"


def test_grid_parsing():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    grid = parse_grid("-1:0:0.1")
    assert len(grid) == 11 and grid[0] == -1.0 and grid[-1] == 0.0
    assert parse_grid("0:1.04:0.1")[-1] == 1.0
    assert parse_grid("0:0:1") == [0.0]
    for bad in ("0:1", "a:b:c", "0:1:0", "1:0:0.5"):
        with pytest.raises(ValidationError):
            parse_grid(bad)
    assert parse_dims("50,100") == [50, 100]
    with pytest.raises(ValidationError):
        parse_dims("")


def test_empty_records_give_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    write_table([], "csv", path, columns=["param", "coh_ratio"])
    assert path.read_bytes() == b"param,coh_ratio\r\n"
    assert read_csv(path) == []


def test_csv_round_trip_is_bit_exact(tmp_path, rng):
    values = np.concatenate([rng.standard_normal(50) * 10.0 ** rng.integers(-300, 300, 50),
                             [0.1, 1 / 3, 2.0 ** -1074, 1.7976931348623157e308, -0.0]])
    path = tmp_path / "vals.csv"
    write_table([{"x": float(v), "label": "a,b"} for v in values], "csv", path)
    back = read_csv(path)
    assert [r["label"] for r in back] == ["a,b"] * len(values)
    got = np.array([r["x"] for r in back])
    assert got.tobytes() == values.tobytes()


def test_number_format():
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(3) == "3"
    assert format_number(float("nan")) == "nan"
    assert render_csv([{"flags": []}, {"flags": ["a", "b"]}]) == "flags\r\nok\r\na;b\r\n"


def test_config_hash_is_stable():
    cfg = {"family": "lambda", "dims": [50, 100], "param": 0.5}
    assert config_hash(cfg) == config_hash(dict(reversed(list(cfg.items()))))
    assert config_hash(cfg) != config_hash({**cfg, "param": 0.25})


def test_heterogeneous_records_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_table([{"a": 1}, {"b": 2}], "csv", tmp_path / "x.csv")


def test_config_value_types_validated(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"dim": "many", "window-factor": 2.0}))
    assert run_cli(["condition4", "--config", str(cfg)]) == 2
    cfg.write_text("[1, 2]")
    assert run_cli(["observables", "--config", str(cfg)]) == 2
