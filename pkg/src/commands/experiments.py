"""Verification experiment commands for the walsh-tf CLI."""

import json
from typing import Any, Dict

import click
from click.core import ParameterSource

from harness.calibration import CalibrationMissing
from harness.config import CALIB_ENV, ConfigError, Experiment, build_config
from harness.experiments import EXPERIMENTS
from harness.runner import EXIT_CALIBRATION, EXIT_CONFIG, EXIT_VIOLATION, run_experiment
from utils.formatting import format_metrics, format_table
from walsh.errors import WalshError

# command-line option name -> ExperimentConfig field
OPTION_FIELDS = {
    "grid_j": "grid_j",
    "grid_k": "grid_k",
    "seed": "seed",
    "trials": "trials",
    "r": "r",
    "p": "p",
    "out": "out_path",
    "calibrate": "calibrate",
    "calib": "calib_path",
    "workers": "workers",
    "restarts": "restarts",
    "headroom": "headroom",
}

EXPLICIT_SOURCES = (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)

DESCRIPTIONS = {
    Experiment.JUMP: "Jump inequality ratios for martingale averages of random H-valued f.",
    Experiment.VARIATION: "r-variation ratios of martingale averages and the Minkowski product bound.",
    Experiment.SIZE_BOUND: "Tree size against inf M_2 f and the tree variation estimate.",
    Experiment.BESSEL: "select_forest partition, per-level size bound and Bessel ratios.",
    Experiment.BOURGAIN: "Maximal multiplier ratios over N frequencies and their growth in N.",
    Experiment.TREE_POINTWISE: "W^max against (sigma + gamma) beta^(r/4-1/2) outside the exceptional sets.",
    Experiment.WEAK_TYPE: "Weak-type ratios lambda^p m{W^max 1_F > lambda} / |F|.",
    Experiment.ORACLE_CROSSCHECK: "M2* ascent estimate against the exhaustive oracle and the upper bound.",
}


def _explicit_options(ctx: click.Context, options: Dict[str, Any]) -> Dict[str, Any]:
    """Options the user actually gave, keyed by config field."""
    overrides = {}
    for name, value in options.items():
        if name in OPTION_FIELDS and ctx.get_parameter_source(name) in EXPLICIT_SOURCES:
            overrides[OPTION_FIELDS[name]] = value
    return overrides


def _run(ctx: click.Context, experiment: Experiment, options: Dict[str, Any]) -> None:
    try:
        cfg = build_config(experiment, options.get("config"), _explicit_options(ctx, options))
        outcome = run_experiment(cfg)
    except ConfigError as e:
        click.echo(f"Configuration error: {e}", err=True)
        ctx.exit(EXIT_CONFIG)
    except CalibrationMissing as e:
        click.echo(f"Calibration error: {e}", err=True)
        ctx.exit(EXIT_CALIBRATION)
    except WalshError as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_VIOLATION)

    if options.get("json_output"):
        result = {
            "experiment": experiment.value,
            "exit_code": outcome.exit_code,
            "metrics": outcome.metrics,
            "constants": outcome.constants,
            "summary": outcome.summary,
            "violations": outcome.violations,
            "paths": list(outcome.paths),
        }
        click.echo(json.dumps(result, indent=2, sort_keys=True))
    else:
        mode = "calibrated" if cfg.calibrate else "verified"
        click.echo(f"{experiment.value} on {cfg.grid}: {cfg.trials} trials, {len(outcome.rows)} rows ({mode})")
        for line in format_metrics(outcome.metrics, outcome.constants):
            click.echo(f"  {line}")
        for key, value in sorted(outcome.summary.items()):
            click.echo(f"  {key}: {value}")
        if options.get("show_rows"):
            for line in format_table(outcome.rows, EXPERIMENTS[experiment].columns):
                click.echo(line)
        for path in outcome.paths:
            click.echo(f"Wrote {path}")
        for violation in outcome.violations:
            click.echo(click.style(violation, fg="red"), err=True)
    ctx.exit(outcome.exit_code)


def _experiment_command(experiment: Experiment) -> click.Command:
    @click.command(experiment.value, help=DESCRIPTIONS[experiment])
    @click.option("--grid-j", type=int, default=None, help="Time exponent J of the grid")
    @click.option("--grid-k", type=int, default=None, help="Frequency exponent K of the grid")
    @click.option("--seed", type=int, default=None, help="Master seed (64-bit unsigned)")
    @click.option("--trials", type=int, default=None, help="Number of random trials")
    @click.option("--r", type=float, default=None, help="Variation exponent r > 2")
    @click.option("--p", type=float, default=None, help="Exponent p > 1 (weak-type only)")
    @click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV report path")
    @click.option("--calibrate", is_flag=True, help="Record constants instead of verifying them")
    @click.option("--calib", envvar=CALIB_ENV, type=click.Path(dir_okay=False), default=None,
                  help=f"Calibration store (default: ${CALIB_ENV} or calibration.json)")
    @click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
                  help="File of 'key = value' lines; flags override it")
    @click.option("--workers", type=int, default=None, help="Worker processes for the trials")
    @click.option("--restarts", type=int, default=None, help="Ascent restarts for M2* estimates")
    @click.option("--headroom", type=float, default=None, help="Calibration headroom factor")
    @click.option("--rows", "show_rows", is_flag=True, help="Print every report row")
    @click.option("--json", "json_output", is_flag=True, help="Output in JSON format")
    @click.pass_context
    def command(ctx: click.Context, **options: Any):
        _run(ctx, experiment, options)

    return command


experiment_commands = [_experiment_command(experiment) for experiment in Experiment]
