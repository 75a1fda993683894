"""Test cases for the experiment commands."""

import json

import pytest
from click.testing import CliRunner

from cli import cli
from harness.config import CALIB_ENV


@pytest.fixture
def runner(monkeypatch):
    monkeypatch.delenv(CALIB_ENV, raising=False)
    return CliRunner()


def test_oracle_crosscheck_passes(runner, tmp_path):
    """Test a clean cross-check run."""
    calib = str(tmp_path / "calibration.json")
    result = runner.invoke(cli, ["oracle-crosscheck", "--trials", "2", "--calib", calib])
    assert result.exit_code == 0
    assert "oracle-crosscheck on Grid(J=1, K=2): 2 trials, 2 rows (verified)" in result.output


def test_calibrate_then_verify(runner, tmp_path):
    """Test that a verify run after calibration succeeds and prints constants."""
    calib = str(tmp_path / "calibration.json")
    args = ["jump", "--grid-j", "2", "--grid-k", "1", "--trials", "2", "--calib", calib]
    result = runner.invoke(cli, args + ["--calibrate"])
    assert result.exit_code == 0
    assert "(calibrated)" in result.output
    assert "ratio" in result.output

    result = runner.invoke(cli, args)
    assert result.exit_code == 0
    assert "(verified)" in result.output
    assert "<=" in result.output


def test_missing_calibration_exit_code(runner, tmp_path):
    """Test exit code 3 when verifying without a calibrated constant."""
    calib = str(tmp_path / "calibration.json")
    result = runner.invoke(cli, ["jump", "--grid-j", "1", "--grid-k", "1", "--trials", "1", "--calib", calib])
    assert result.exit_code == 3
    assert "--calibrate" in result.output


def test_configuration_error_exit_code(runner, tmp_path):
    """Test exit code 2 for invalid parameters and bad config files."""
    calib = str(tmp_path / "calibration.json")
    result = runner.invoke(cli, ["variation", "--r", "1.5", "--calib", calib])
    assert result.exit_code == 2
    assert "Configuration error" in result.output

    config = tmp_path / "run.cfg"
    config.write_text("trials = lots\n")
    result = runner.invoke(cli, ["jump", "--config", str(config), "--calib", calib])
    assert result.exit_code == 2

    config.write_text("experiment = bessel\ntrials = 1\n")
    result = runner.invoke(cli, ["jump", "--config", str(config), "--calib", calib])
    assert result.exit_code == 2
    assert "for bessel, not jump" in result.output


def test_config_file_with_override(runner, tmp_path):
    """Test that flags beat the config file."""
    config = tmp_path / "run.cfg"
    config.write_text("grid_j = 1\ngrid_k = 1\ntrials = 5\ncalibrate = true\n")
    calib = str(tmp_path / "calibration.json")
    result = runner.invoke(cli, ["jump", "--config", str(config), "--trials", "2", "--calib", calib])
    assert result.exit_code == 0
    assert "2 trials, 10 rows (calibrated)" in result.output


def test_calibration_from_environment(runner, tmp_path, monkeypatch):
    """Test that WALSH_TF_CALIB picks the store."""
    calib = tmp_path / "env.json"
    monkeypatch.setenv(CALIB_ENV, str(calib))
    result = runner.invoke(cli, ["jump", "--grid-j", "1", "--grid-k", "1", "--trials", "1", "--calibrate"])
    assert result.exit_code == 0
    assert "jump/ratio@J1K1" in json.loads(calib.read_text())


def test_json_output_and_reports(runner, tmp_path):
    """Test the JSON summary and the CSV and JSON report files."""
    out = tmp_path / "reports" / "bessel.csv"
    calib = str(tmp_path / "calibration.json")
    result = runner.invoke(cli, ["bessel", "--grid-j", "2", "--grid-k", "2", "--trials", "1", "--calibrate",
                                 "--calib", calib, "--out", str(out), "--json"])
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert data["experiment"] == "bessel"
    assert data["exit_code"] == 0
    assert data["paths"] == [str(out), str(tmp_path / "reports" / "bessel.json")]
    assert out.read_text().startswith("trial,seed,n,trees,top_measure,f_norm2,ratio\n")


def test_rows_table(runner, tmp_path):
    """Test that --rows prints the report columns."""
    calib = str(tmp_path / "calibration.json")
    result = runner.invoke(cli, ["oracle-crosscheck", "--trials", "1", "--rows", "--calib", calib])
    assert result.exit_code == 0
    assert "members" in result.output
    assert "oracle" in result.output
