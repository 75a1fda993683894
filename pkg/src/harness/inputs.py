"""Reproducible random inputs: dyadic sets, amplitudes and bitile collections."""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from walsh.dyadic_core import DyadicInterval, Grid, StepFunction
from walsh.seeding import trial_rng
from walsh.tile_geometry import Bitile, all_bitiles, wave_packet


class InputKind(str, Enum):
    INDICATOR_SET = "indicator-set"
    RANDOM_AMPLITUDES = "random-amplitudes"
    WAVE_PACKET_COMBO = "wave-packet-combo"


@dataclass(frozen=True, eq=False)
class GeneratedInput:
    kind: InputKind
    function: StepFunction
    bitiles: Tuple[Bitile, ...] = ()

    @property
    def cells(self) -> List[int]:
        """Support cells; meaningful for indicator sets."""
        return [int(c) for c in np.flatnonzero(self.function.pointwise_norm())]


def random_dyadic_set(grid: Grid, rng: np.random.Generator, pieces: Optional[int] = None) -> np.ndarray:
    """Indicator values of a union of random dyadic intervals."""
    if pieces is None:
        pieces = int(rng.integers(1, 5))
    values = np.zeros(grid.size)
    for _ in range(pieces):
        scale = int(rng.integers(-grid.K, grid.J + 1))
        index = int(rng.integers(0, 1 << (grid.J - scale)))
        values[grid.time_slice(DyadicInterval(scale, index))] = 1.0
    return values


def random_bitiles(grid: Grid, rng: np.random.Generator, density: float = 0.5) -> Tuple[Bitile, ...]:
    """Each bitile of the grid kept independently with probability density."""
    universe = all_bitiles(grid)
    keep = rng.random(len(universe)) < density
    return tuple(P for P, kept in zip(universe, keep) if kept)


def generate_inputs(
    kind: InputKind,
    grid: Grid,
    seed: int,
    dim: int = 1,
    density: float = 0.5,
    packets: int = 3,
) -> GeneratedInput:
    """One random input of the given kind; identical for identical arguments.

    wave-packet-combo sums lower-tile packets of distinct random bitiles with
    amplitudes scaled so that the largest is 1; one packet gives w_{P_1}.
    """
    kind = InputKind(kind)
    rng = trial_rng(seed, 0)
    if kind is InputKind.INDICATOR_SET:
        return GeneratedInput(kind, StepFunction(grid, random_dyadic_set(grid, rng)))
    if kind is InputKind.RANDOM_AMPLITUDES:
        shape = (grid.size,) if dim == 1 else (grid.size, dim)
        values = rng.standard_normal(shape)
        return GeneratedInput(kind, StepFunction(grid, values), random_bitiles(grid, rng, density))
    universe = all_bitiles(grid)
    chosen = rng.choice(len(universe), size=min(packets, len(universe)), replace=False)
    bitiles = tuple(universe[int(i)] for i in sorted(chosen))
    amplitudes = rng.uniform(0.5, 1.5, size=len(bitiles))
    amplitudes /= amplitudes.max()
    values = np.zeros(grid.size)
    for amplitude, P in zip(amplitudes, bitiles):
        values += amplitude * wave_packet(P.lower, grid).values
    return GeneratedInput(kind, StepFunction(grid, values), bitiles)
