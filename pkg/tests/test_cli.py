"""Test cases for the CLI interface.

Contains unit tests for the main CLI entry point and command registration."""

from click.testing import CliRunner
from cli import cli


def test_cli_basic():
    """Test that the CLI can be invoked without errors."""
    runner = CliRunner()
    result = runner.invoke(cli, ["--help"])
    assert result.exit_code == 0
    assert "Numerical checks for Walsh-model time-frequency estimates." in result.output


def test_cli_version():
    """Test that version flag works correctly."""
    runner = CliRunner()
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "version" in result.output.lower()
    assert "0.1.0" in result.output


def test_all_commands_registered():
    """Test that all commands are properly registered."""
    runner = CliRunner()
    result = runner.invoke(cli, ["--help"])

    expected_commands = [
        "jump",
        "variation",
        "size-bound",
        "bessel",
        "bourgain",
        "tree-pointwise",
        "weak-type",
        "oracle-crosscheck",
        "generate",
        "select-forest",
    ]
    for cmd in expected_commands:
        assert cmd in result.output


def test_experiment_help_lists_options():
    """Test that every experiment shares the run options."""
    runner = CliRunner()
    result = runner.invoke(cli, ["weak-type", "--help"])
    assert result.exit_code == 0
    for option in ("--grid-j", "--grid-k", "--seed", "--trials", "--r", "--p", "--out",
                   "--calibrate", "--calib", "--config", "--workers", "--json"):
        assert option in result.output
