import argparse
import csv
import json
import math
from pathlib import Path
from typing import Any

import pytest
import yaml

from hybrid_relax.cli import (
    EXIT_INVALID,
    EXIT_NOT_FOUND,
    EXIT_OK,
    EXIT_SIMULATION,
    RunConfig,
    _floats,
    _param,
    main,
)

from .systems import glued_tree


def _write_system(path: Path, tree: dict[str, Any]) -> Path:
    path.write_text(yaml.safe_dump(tree))
    return path


def _manifest(out: Path) -> dict[str, Any]:
    return json.loads((out / "manifest.json").read_text())


def test_validate_writes_report(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    system = _write_system(tmp_path / "glued.yaml", glued_tree())
    out = tmp_path / "out"
    assert main(["validate", str(system), "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report == {"violations": []}
    assert '"violations": []' in capsys.readouterr().out
    manifest = _manifest(out)
    assert manifest["command"] == "validate"
    assert manifest["artifacts"] == ["report.json"]
    assert manifest["metrics"] == {"violations": 0.0}


def test_invalid_system_exit_code(tmp_path: Path) -> None:
    tree = glued_tree()
    tree["edges"][0]["guard"]["normal"] = [0.0, 2.0]
    system = _write_system(tmp_path / "bad.yaml", tree)
    out = tmp_path / "out"
    assert main(["validate", str(system), "--out", str(out)]) == EXIT_INVALID
    report = json.loads((out / "report.json").read_text())
    codes = {v["code"] for v in report["violations"]}
    assert "normal_not_unit" in codes
    args = ["simulate", str(system), "--x0=0,0", "--T", "1", "--h", "0.1"]
    assert main([*args, "--eps", "0.05", "--out", str(out)]) == EXIT_INVALID


def test_missing_file(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    missing = tmp_path / "nope.yaml"
    assert main(["validate", str(missing), "--out", str(tmp_path)]) == EXIT_NOT_FOUND
    assert "file not found" in capsys.readouterr().err


def test_conflicting_sources(tmp_path: Path) -> None:
    system = _write_system(tmp_path / "glued.yaml", glued_tree())
    argv = ["simulate", str(system), "--example", "bouncing-ball"]
    assert main([*argv, "--out", str(tmp_path)]) == EXIT_INVALID


def test_malformed_yaml(tmp_path: Path) -> None:
    system = tmp_path / "broken.yaml"
    system.write_text("state_dim: [1,\n")
    assert main(["validate", str(system), "--out", str(tmp_path)]) == EXIT_INVALID


def test_example_simulate(tmp_path: Path) -> None:
    out = tmp_path / "ball"
    argv = ["example", "bouncing-ball", "--T", "2", "--h", "1e-3", "--eps", "1e-4"]
    assert main([*argv, "--out", str(out)]) == EXIT_OK
    with (out / "trajectory.csv").open(encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "mode", "region", "x0", "x1", "event_edge"]
    assert float(rows[1][3]) == 1.0
    manifest = _manifest(out)
    assert manifest["command"] == "example"
    assert manifest["termination"] == "horizon_reached"
    assert manifest["config"]["example"] == "bouncing-ball"
    assert manifest["metrics"]["events"] == 1.0
    assert manifest["metrics"]["zeno_time"] == pytest.approx(3.0 * 2.0**0.5)
    assert "rest_error" not in manifest["metrics"]


def test_trajectory_csv_is_reproducible(tmp_path: Path) -> None:
    argv = ["example", "double-pendulum", "--T", "1.5", "--h", "1e-3", "--eps", "1e-3"]
    written = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main([*argv, "--c", "0.5", "--out", str(out)]) == EXIT_OK
        written.append((out / "trajectory.csv").read_bytes())
    assert written[0] == written[1]
    assert written[0].count(b"\n") > 1000


def test_simulate_system_file_with_inputs(tmp_path: Path) -> None:
    tree = glued_tree()
    tree["input_dim"] = 1
    tree["input_box"] = [[-2.0, 2.0]]
    tree["modes"][0]["field"]["params"]["G"] = [[0.0], [1.0]]
    tree["modes"][1]["field"]["params"]["G"] = [[0.0], [1.0]]
    system = _write_system(tmp_path / "glued.yaml", tree)
    inputs = tmp_path / "u.yaml"
    inputs.write_text(yaml.safe_dump({"breakpoints": [0.0], "values": [[-1.0]]}))
    out = tmp_path / "out"
    argv = ["simulate", str(system), "--x0=0,-1", "--T", "1", "--h", "0.1"]
    argv += ["--eps", "0.05", "--inputs", str(inputs), "--out", str(out)]
    assert main(argv) == EXIT_OK
    manifest = _manifest(out)
    assert manifest["metrics"]["events"] == 0.0
    with (out / "trajectory.csv").open(encoding="utf-8") as fh:
        last = list(csv.reader(fh))[-1]
    assert float(last[4]) == pytest.approx(-1.0)


def test_filippov_command(tmp_path: Path) -> None:
    system = _write_system(tmp_path / "glued.yaml", glued_tree())
    out = tmp_path / "out"
    argv = ["filippov", str(system), "--x0=0,0", "--T", "2", "--out", str(out)]
    assert main(argv) == EXIT_OK
    assert _manifest(out)["metrics"]["events"] == 1.0


def test_sweep_writes_artifacts(tmp_path: Path) -> None:
    out = tmp_path / "sweep"
    argv = ["sweep", "--example", "bouncing-ball", "--T", "1", "--eps", "1e-4"]
    argv += ["--h", "0.01", "0.005", "0.0025", "0.00125", "--out", str(out)]
    assert main(argv) == EXIT_OK
    with (out / "sweep.csv").open(encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 5
    assert float(rows[-1][3]) == 0.0
    fit = json.loads((out / "fit.json").read_text())
    assert fit["axis"] == "h"
    assert _manifest(out)["artifacts"] == ["sweep.csv", "fit.json"]


def test_sensitivity_needs_deltas(tmp_path: Path) -> None:
    argv = ["sensitivity", "--example", "double-pendulum", "--T", "0.1"]
    assert main([*argv, "--out", str(tmp_path)]) == EXIT_INVALID


def test_simulation_error_exit_code(tmp_path: Path) -> None:
    argv = ["example", "bouncing-ball", "--T", "1", "--h", "0.3", "--eps", "1e-3"]
    assert main([*argv, "--out", str(tmp_path)]) == EXIT_SIMULATION


def test_run_config_defaults_for_examples() -> None:
    config = RunConfig(command="simulate", example="double-pendulum")
    assert config.horizon() == 10.0
    assert config.initial_state()[2] == pytest.approx(math.radians(35.0))
    assert config.widths() == [1e-5]
    ratio = RunConfig(
        command="sweep", example="bouncing-ball", h=[0.1, 0.2], eps_ratio=0.5
    )
    assert ratio.widths() == [0.05, 0.1]


def test_argument_parsers() -> None:
    assert _floats("1, -2 3e-1") == [1.0, -2.0, 0.3]
    assert _param("g=9.81") == ("g", 9.81)
    with pytest.raises(argparse.ArgumentTypeError):
        _param("g")
    with pytest.raises(argparse.ArgumentTypeError):
        _floats("1,x")
