"""
Command line interface for walsh-tf.

This module provides the main CLI entry point for the verification
experiments and the input tools.
"""

import logging

import click

from commands.experiments import experiment_commands
from commands.inputs import generate, select_forest_command
from walsh import __version__

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


@click.group()
@click.version_option(version=__version__, package_name="walsh-tf")
@click.option("--verbose", "-v", count=True, help="Log more; repeat for debug output")
def cli(verbose: int):
    """Numerical checks for Walsh-model time-frequency estimates.

    Every experiment runs seeded random trials, records calibration
    constants with --calibrate and verifies against them otherwise.
    """
    logging.basicConfig(
        level=LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)],
        format="%(levelname)s %(name)s: %(message)s",
    )


# Register all commands with the main CLI
for command in experiment_commands:
    cli.add_command(command)
cli.add_command(generate)
cli.add_command(select_forest_command)
