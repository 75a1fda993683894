"""Test cases for the inputs module."""

import json

import numpy as np
from click.testing import CliRunner

from cli import cli
from walsh.tile_geometry import load_bitiles, load_forest


def test_generate_summary():
    """Test the default generate output."""
    runner = CliRunner()
    result = runner.invoke(cli, ["generate", "--grid-j", "2", "--grid-k", "1", "--seed", "3"])
    assert result.exit_code == 0
    assert result.output.startswith("random-amplitudes on Grid(J=2, K=1): ||f||_2 = ")


def test_generate_is_reproducible():
    """Test that the same seed gives the same JSON output."""
    runner = CliRunner()
    args = ["generate", "--kind", "indicator-set", "--grid-j", "2", "--grid-k", "2", "--seed", "5", "--json"]
    first = json.loads(runner.invoke(cli, args).output)
    second = json.loads(runner.invoke(cli, args).output)
    assert first == second
    assert first["kind"] == "indicator-set"
    assert len(first["values"]) == 16
    assert set(first["values"]) <= {0.0, 1.0}


def test_generate_rejects_bad_grid():
    """Test exit code 2 for a negative grid exponent."""
    runner = CliRunner()
    result = runner.invoke(cli, ["generate", "--grid-j=-1"])
    assert result.exit_code == 2
    assert "Configuration error" in result.output


def test_generate_then_select_forest(tmp_path):
    """Test the file pipeline from generate to select-forest."""
    runner = CliRunner()
    values = tmp_path / "f.txt"
    bitiles = tmp_path / "S.txt"
    forest = tmp_path / "forest.txt"
    grid = ["--grid-j", "2", "--grid-k", "2"]
    result = runner.invoke(cli, ["generate", *grid, "--seed", "8", "--values-out", str(values),
                                 "--bitiles-out", str(bitiles)])
    assert result.exit_code == 0
    assert f"Wrote {values}" in result.output
    assert np.loadtxt(values).shape == (16,)
    count = len(load_bitiles(bitiles.read_text()))

    result = runner.invoke(cli, ["select-forest", "--bitiles", str(bitiles), "--values", str(values),
                                 *grid, "--out", str(forest)])
    assert result.exit_code == 0
    assert result.output.startswith(f"{count} bitiles in ")
    selected = load_forest(forest.read_text())
    assert selected.bitiles() <= set(load_bitiles(bitiles.read_text()))

    result = runner.invoke(cli, ["select-forest", "--bitiles", str(bitiles), "--values", str(values),
                                 *grid, "--json"])
    levels = json.loads(result.output)
    assert sum(level["bitiles"] for level in levels) == count
    assert all(level["bessel_ratio"] >= 0 for level in levels)


def test_select_forest_grid_mismatch(tmp_path):
    """Test that values of the wrong length are reported."""
    runner = CliRunner()
    values = tmp_path / "f.txt"
    bitiles = tmp_path / "S.txt"
    values.write_text("1.0\n2.0\n3.0\n")
    bitiles.write_text("")
    result = runner.invoke(cli, ["select-forest", "--bitiles", str(bitiles), "--values", str(values),
                                 "--grid-j", "1", "--grid-k", "1"])
    assert result.exit_code == 1
    assert "Error" in result.output
