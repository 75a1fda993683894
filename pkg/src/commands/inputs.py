"""Input generation and forest selection commands for the walsh-tf CLI."""

import json

import click
import numpy as np

from harness.inputs import InputKind, generate_inputs
from walsh.dyadic_core import Grid, StepFunction
from walsh.errors import WalshError
from walsh.size_selection import select_forest
from walsh.tile_geometry import dump_bitiles, dump_forest, load_bitiles


def _grid(ctx: click.Context, grid_j: int, grid_k: int) -> Grid:
    try:
        return Grid(grid_j, grid_k)
    except ValueError as e:
        click.echo(f"Configuration error: {e}", err=True)
        ctx.exit(2)


@click.command("generate")
@click.option(
    "--kind",
    type=click.Choice([kind.value for kind in InputKind]),
    default=InputKind.RANDOM_AMPLITUDES.value,
    show_default=True,
    help="Kind of random input",
)
@click.option("--grid-j", type=int, default=3, show_default=True, help="Time exponent J of the grid")
@click.option("--grid-k", type=int, default=3, show_default=True, help="Frequency exponent K of the grid")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed")
@click.option("--dim", type=int, default=1, show_default=True, help="Dimension of H for random amplitudes")
@click.option("--values-out", type=click.Path(dir_okay=False), default=None, help="Write cell values here")
@click.option("--bitiles-out", type=click.Path(dir_okay=False), default=None, help="Write the bitiles here")
@click.option("--json", "json_output", is_flag=True, help="Output in JSON format")
@click.pass_context
def generate(ctx, kind, grid_j, grid_k, seed, dim, values_out, bitiles_out, json_output):
    """Generate a reproducible random input on Grid(J, K).

    The same kind, grid and seed always give the same function and bitiles.
    """
    grid = _grid(ctx, grid_j, grid_k)
    generated = generate_inputs(InputKind(kind), grid, seed, dim=dim)
    values = generated.function.values
    if values_out:
        np.savetxt(values_out, values)
    if bitiles_out:
        with open(bitiles_out, "w", encoding="utf-8") as fh:
            fh.write(dump_bitiles(generated.bitiles))

    if json_output:
        result = {
            "kind": generated.kind.value,
            "grid": [grid.J, grid.K],
            "seed": seed,
            "l2_norm": generated.function.l2_norm(),
            "bitiles": len(generated.bitiles),
            "values": values.tolist(),
        }
        click.echo(json.dumps(result, indent=2))
    else:
        click.echo(f"{generated.kind.value} on {grid}: ||f||_2 = {generated.function.l2_norm():.6g}, "
                   f"{len(generated.bitiles)} bitiles")
        if values_out:
            click.echo(f"Wrote {values_out}")
        if bitiles_out:
            click.echo(f"Wrote {bitiles_out}")


@click.command("select-forest")
@click.option("--bitiles", "bitiles_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Bitile file, one 'i_time m_time i_freq m_freq' per line")
@click.option("--values", "values_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Cell values of f, one per line")
@click.option("--grid-j", type=int, default=3, show_default=True, help="Time exponent J of the grid")
@click.option("--grid-k", type=int, default=3, show_default=True, help="Frequency exponent K of the grid")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the selected forest here")
@click.option("--json", "json_output", is_flag=True, help="Output in JSON format")
@click.pass_context
def select_forest_command(ctx, bitiles_path, values_path, grid_j, grid_k, out, json_output):
    """Split a bitile collection into levels of decreasing size.

    Each level n has collection size at most 2^-n and comes with its trees.
    """
    grid = _grid(ctx, grid_j, grid_k)
    try:
        with open(bitiles_path, encoding="utf-8") as fh:
            bitiles = load_bitiles(fh.read())
        values = np.loadtxt(values_path, ndmin=1)
        levels = select_forest(bitiles, StepFunction(grid, values))
    except (ValueError, WalshError) as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(1)

    if out:
        with open(out, "w", encoding="utf-8") as fh:
            for level in levels:
                label = "residual" if level.residual else f"n = {level.n}"
                fh.write(f"# level {label}: {len(level.forest)} trees, {len(level.bitiles)} bitiles\n")
                fh.write(dump_forest(level.forest))

    if json_output:
        result = [
            {
                "n": level.n,
                "residual": level.residual,
                "trees": len(level.forest),
                "bitiles": len(level.bitiles),
                "top_measure": level.top_measure,
                "bessel_ratio": level.bessel_ratio,
            }
            for level in levels
        ]
        click.echo(json.dumps(result, indent=2))
    else:
        click.echo(f"{len(bitiles)} bitiles in {len(levels)} levels")
        for level in levels:
            label = "residual" if level.residual else f"n = {level.n}"
            click.echo(f"  {label}: {len(level.forest)} trees, {len(level.bitiles)} bitiles, "
                       f"Bessel ratio {level.bessel_ratio:.6g}")
        if out:
            click.echo(f"Wrote {out}")
