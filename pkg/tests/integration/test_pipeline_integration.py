"""Integration tests for the command-line pipeline."""
import json
from pathlib import Path

import numpy as np
import pytest

from main import build_parser, main
from src.errors import ParameterError
from src.pipeline import RunConfig, cmd_run_scenario
from src.utils import load_config


def run_cli(tmp_path, name, *argv):
    out = tmp_path / f"{name}.json"
    code = main([*argv, "--out", str(out)])
    return code, json.loads(out.read_text(encoding="utf-8"))


@pytest.mark.integration
def test_config_file_exists():
    """The default configuration ships with every section the commands read."""
    config_path = Path("config/config.yaml")
    assert config_path.exists(), "Config file should exist"

    config = load_config()
    for section in ("tolerances", "calculus", "quadrature", "boundary_method", "defaults"):
        assert section in config


@pytest.mark.integration
def test_verify_algebra(tmp_path):
    code, payload = run_cli(tmp_path, "algebra", "verify-algebra", "--dim", "4", "--seed", "42", "--trials", "1000")
    assert code == 0
    assert payload["command"] == "verify-algebra"
    assert payload["residuals"]["associativity"] < 1e-12
    assert payload["passed"] is True


@pytest.mark.integration
def test_verify_algebra_without_trials(tmp_path):
    code, payload = run_cli(tmp_path, "empty", "verify-algebra", "--dim", "3", "--trials", "0")
    assert code == 0
    assert payload["trials"] == 0


@pytest.mark.integration
@pytest.mark.parametrize("dim", ["1", "9", "two"])
def test_dimension_out_of_range_is_a_usage_error(dim):
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["verify-algebra", "--dim", dim])
    assert excinfo.value.code == 2


@pytest.mark.integration
def test_output_is_deterministic(tmp_path):
    argv = ["verify-algebra", "--dim", "3", "--seed", "5", "--trials", "200"]
    main([*argv, "--out", str(tmp_path / "first.json")])
    main([*argv, "--out", str(tmp_path / "second.json")])
    assert (tmp_path / "first.json").read_bytes() == (tmp_path / "second.json").read_bytes()


@pytest.mark.integration
def test_verify_table(tmp_path):
    code, payload = run_cli(tmp_path, "table", "verify-table", "--dim", "2", "--trials", "20")
    assert code == 0
    assert payload["passed"] is True
    assert any(entry["name"] == "circle" for entry in payload["catalog"])


@pytest.mark.integration
@pytest.mark.slow
def test_disk_scenario(tmp_path):
    code, payload = run_cli(
        tmp_path, "disk", "run-scenario", "disk", "--radius", "1", "--eps-sweep", "1e-1,1e-2,1e-3", "--cells", "64"
    )
    assert code == 0
    assert payload["extrapolated_coefficient"] == pytest.approx(np.pi, abs=1e-6)
    assert payload["oracle"]["theorem_holds"] is True
    assert payload["cut_jump"] == pytest.approx(np.pi, abs=1e-6)


@pytest.mark.integration
@pytest.mark.slow
def test_cylinder_scenario(tmp_path):
    code, payload = run_cli(
        tmp_path,
        "cylinder",
        "run-scenario",
        "cylinder",
        "--radius",
        "1",
        "--height",
        "2",
        "--eps-sweep",
        "1e-1,1e-2,1e-3",
        "--no-oracle",
    )
    assert code == 0
    assert payload["extrapolated_coefficient"] == pytest.approx(2.0 * np.pi, abs=1e-4)
    assert payload["oracle"] is None


@pytest.mark.integration
def test_single_chamfer_run(tmp_path):
    code, payload = run_cli(tmp_path, "single", "run-scenario", "disk", "--chamfer", "0.01", "--no-oracle")
    assert code == 0
    assert payload["sweep"] == []
    assert payload["coefficient"] == pytest.approx(np.pi - 0.01, rel=1e-12)


@pytest.mark.integration
def test_check_ftc(tmp_path):
    code, payload = run_cli(
        tmp_path, "ftc", "check-ftc", "--field", "half-x-squared", "--patch", "unit-square", "--cells", "256"
    )
    assert code == 0
    assert payload["residual"] < 1e-6


@pytest.mark.integration
def test_oracle_disk_area(tmp_path):
    code, payload = run_cli(tmp_path, "oracle", "oracle", "--patch", "unit-disk", "--cells", "128")
    assert code == 0
    assert payload["integral"]["value"]["e12"] == pytest.approx(np.pi, abs=1e-8)


@pytest.mark.integration
def test_invalid_chamfer_fails_cleanly():
    """A parameter error is logged and turned into exit code 1."""
    assert main(["run-scenario", "cylinder", "--chamfer", "0.5", "--no-oracle"]) == 1


@pytest.mark.integration
def test_chamfer_and_sweep_are_exclusive():
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["run-scenario", "disk", "--chamfer", "0.01", "--eps-sweep", "1e-1,1e-2"])
    assert excinfo.value.code == 2
    run = RunConfig("run-scenario", load_config(), scenario="disk", chamfer=0.01, eps_sweep=[1e-1, 1e-2])
    with pytest.raises(ParameterError):
        cmd_run_scenario(run)
