"""Tiles, bitiles, wave packets, trees and forests."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from walsh.dyadic_core import (
    DyadicInterval,
    DyadicPoint,
    Grid,
    StepFunction,
)
from walsh.errors import IdentityViolation, TileOutsideGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Tile:
    """Dyadic rectangle I_P x omega_P of area one."""

    time: DyadicInterval
    freq: DyadicInterval

    def __post_init__(self):
        if self.time.scale + self.freq.scale != 0:
            raise ValueError(f"tile {self.time} x {self.freq} does not have area one")

    @classmethod
    def from_indices(cls, scale: int, n: int, l: int) -> "Tile":
        """[2^i n, 2^i (n+1)) x [2^-i l, 2^-i (l+1))."""
        return cls(DyadicInterval(scale, n), DyadicInterval(-scale, l))

    @property
    def area(self) -> Fraction:
        return self.time.length * self.freq.length

    def disjoint(self, other: "Tile") -> bool:
        return self.time.disjoint(other.time) or self.freq.disjoint(other.freq)


@dataclass(frozen=True, order=True)
class Bitile:
    """Dyadic rectangle of area two, split into a lower and an upper tile."""

    time: DyadicInterval
    freq: DyadicInterval

    def __post_init__(self):
        if self.time.scale + self.freq.scale != 1:
            raise ValueError(f"bitile {self.time} x {self.freq} does not have area two")

    @classmethod
    def from_indices(cls, scale: int, n: int, l: int) -> "Bitile":
        """[2^i n, 2^i (n+1)) x [2^(1-i) l, 2^(1-i) (l+1))."""
        return cls(DyadicInterval(scale, n), DyadicInterval(1 - scale, l))

    @property
    def area(self) -> Fraction:
        return self.time.length * self.freq.length

    @property
    def freq_lower(self) -> DyadicInterval:
        return self.freq.children[0]

    @property
    def freq_upper(self) -> DyadicInterval:
        return self.freq.children[1]

    @property
    def lower(self) -> Tile:
        return Tile(self.time, self.freq_lower)

    @property
    def upper(self) -> Tile:
        return Tile(self.time, self.freq_upper)

    def __str__(self) -> str:
        return f"{self.time} x {self.freq}"


def bitile_children(P: Bitile) -> Tuple[Tile, Tile]:
    """The lower tile P_1 and the upper tile P_2."""
    return P.lower, P.upper


def tile_le(P, Q) -> bool:
    """P <= Q when I_P is inside I_Q and omega_Q is inside omega_P."""
    return Q.time.contains(P.time) and P.freq.contains(Q.freq)


def all_bitiles(grid: Grid) -> List[Bitile]:
    """Every bitile resolved by the grid: time scales 1-K .. J."""
    bitiles = []
    for scale in range(grid.J, -grid.K, -1):
        for n in range(1 << (grid.J - scale)):
            for l in range(1 << (grid.K + scale - 1)):
                bitiles.append(Bitile.from_indices(scale, n, l))
    return bitiles


def wave_packet(P: Tile, grid: Grid) -> StepFunction:
    """w_P(x) = |I_P|^(-1/2) 1_{I_P}(x) e(x (x) l(omega_P))."""
    time_cells = grid.time_slice(P.time)
    freq_cells = grid.frequency_slice(P.freq)
    values = np.zeros(grid.size)
    signs = grid.character_signs(freq_cells.start)
    values[time_cells] = signs[time_cells] * float(P.time.length) ** -0.5
    return StepFunction(grid, values)


def haar_packet(interval: DyadicInterval, grid: Grid) -> StepFunction:
    """h_I(x) = |I|^(-1/2) h((x - l(I)) / |I|)."""
    if interval.scale <= -grid.K:
        raise TileOutsideGrid(f"halves of {interval} are finer than the grid cells")
    cells = grid.time_slice(interval)
    half = (cells.stop - cells.start) // 2
    amplitude = float(interval.length) ** -0.5
    values = np.zeros(grid.size)
    values[cells.start:cells.start + half] = amplitude
    values[cells.start + half:cells.stop] = -amplitude
    return StepFunction(grid, values)


def modulated_haar_check(P: Bitile, xi: DyadicPoint, grid: Grid) -> int:
    """Return eps(P, xi) with e(xi (x) x) w_{P_1}(x) = eps h_{I_P}(x).

    Raises IdentityViolation if the two sides disagree at any cell.
    """
    if not P.freq_upper.contains_point(xi):
        raise ValueError(f"{xi} is not in the upper half of {P.freq}")
    modulated = grid.character_signs(grid.frequency_cell(xi)) * wave_packet(P.lower, grid).values
    haar = haar_packet(P.time, grid).values
    start = grid.time_slice(P.time).start
    eps = 1 if modulated[start] * haar[start] > 0 else -1
    if not np.allclose(modulated, eps * haar, rtol=0.0, atol=1e-12):
        raise IdentityViolation(f"modulated packet of {P} at {xi} is not a signed Haar function")
    return eps


class TreeKind(str, Enum):
    GENERAL = "tree"
    ONE = "1-tree"
    TWO = "2-tree"


@dataclass(frozen=True)
class Tree:
    """Bitiles pointing at a common top (I_T, xi_T)."""

    top_time: DyadicInterval
    top_freq: DyadicPoint
    bitiles: FrozenSet[Bitile] = frozenset()
    kind: TreeKind = TreeKind.GENERAL

    def __post_init__(self):
        object.__setattr__(self, "bitiles", frozenset(self.bitiles))
        object.__setattr__(self, "kind", TreeKind(self.kind))

    def admits(self, P: Bitile) -> bool:
        if not self.top_time.contains(P.time):
            return False
        if self.kind is TreeKind.ONE:
            return P.freq_lower.contains_point(self.top_freq)
        if self.kind is TreeKind.TWO:
            return P.freq_upper.contains_point(self.top_freq)
        return P.freq.contains_point(self.top_freq)

    def validate(self) -> "Tree":
        for P in self.bitiles:
            if not self.admits(P):
                raise ValueError(f"{P} does not belong to a {self.kind.value} with top "
                                 f"{self.top_time} x {self.top_freq}")
        return self

    def __iter__(self) -> Iterator[Bitile]:
        return iter(sorted(self.bitiles))

    def __len__(self) -> int:
        return len(self.bitiles)


def maximal_tree(
    bitiles: Iterable[Bitile],
    top_time: DyadicInterval,
    top_freq: DyadicPoint,
    kind: TreeKind = TreeKind.GENERAL,
) -> Tree:
    """All bitiles of the collection that fit the top for the given kind."""
    template = Tree(top_time, top_freq, frozenset(), kind)
    return Tree(top_time, top_freq, frozenset(P for P in bitiles if template.admits(P)), kind)


def maximal_two_tree(
    bitiles: Iterable[Bitile], top_time: DyadicInterval, top_freq: DyadicPoint
) -> Tree:
    return maximal_tree(bitiles, top_time, top_freq, TreeKind.TWO)


@dataclass(frozen=True)
class Forest:
    """Ordered list of trees; trees may overlap."""

    trees: Tuple[Tree, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))

    def __iter__(self) -> Iterator[Tree]:
        return iter(self.trees)

    def __len__(self) -> int:
        return len(self.trees)

    def bitiles(self) -> FrozenSet[Bitile]:
        return frozenset(P for tree in self.trees for P in tree.bitiles)


def counting_function(forest: Forest, x: DyadicPoint) -> int:
    """Number of trees, with multiplicity, whose top interval contains x."""
    return sum(1 for tree in forest if tree.top_time.contains_point(x))


def counting_field(forest: Forest, grid: Grid) -> np.ndarray:
    """counting_function evaluated on every time cell."""
    counts = np.zeros(grid.size, dtype=int)
    for tree in forest:
        counts[grid.time_slice(tree.top_time)] += 1
    return counts


def tree_partial_sum(
    tree: Tree,
    coeffs: Mapping[Bitile, float],
    grid: Grid,
    k: Optional[int] = None,
    strict: bool = True,
) -> StepFunction:
    """sum of a_P w_{P_1} over P in T with |I_P| < 2^k (<= 2^k if not strict).

    k=None sums the whole tree.
    """
    values = np.zeros(grid.size)
    for P in tree.bitiles:
        if k is not None and (P.time.scale >= k if strict else P.time.scale > k):
            continue
        values += coeffs[P] * wave_packet(P.lower, grid).values
    return StepFunction(grid, values)


def _bitile_line(P: Bitile) -> str:
    return f"{P.time.scale} {P.time.index} {P.freq.scale} {P.freq.index}"


def _parse_bitile(line: str, lineno: int) -> Bitile:
    parts = line.split()
    if len(parts) != 4:
        raise ValueError(f"line {lineno}: expected 'i_time m_time i_freq m_freq', got {line!r}")
    try:
        i_time, m_time, i_freq, m_freq = (int(p) for p in parts)
    except ValueError:
        raise ValueError(f"line {lineno}: non-integer field in {line!r}") from None
    return Bitile(DyadicInterval(i_time, m_time), DyadicInterval(i_freq, m_freq))


def dump_bitiles(bitiles: Iterable[Bitile]) -> str:
    """One bitile per line: 'i_time m_time i_freq m_freq'."""
    return "".join(_bitile_line(P) + "\n" for P in sorted(bitiles))


def load_bitiles(text: str) -> List[Bitile]:
    bitiles = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            bitiles.append(_parse_bitile(line, lineno))
    return bitiles


def dump_forest(forest: Forest) -> str:
    """Tree header 'top: i m xi_num xi_den kind' followed by its bitile lines."""
    chunks = []
    for tree in forest:
        xi = tree.top_freq.value
        chunks.append(
            f"top: {tree.top_time.scale} {tree.top_time.index} "
            f"{xi.numerator} {xi.denominator} {tree.kind.value}\n"
        )
        chunks.append(dump_bitiles(tree.bitiles))
    return "".join(chunks)


def load_forest(text: str) -> Forest:
    trees = []
    header = None
    members: List[Bitile] = []

    def close():
        if header is not None:
            trees.append(Tree(header[0], header[1], frozenset(members), header[2]))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("top:"):
            close()
            parts = line[len("top:"):].split()
            if len(parts) != 5:
                raise ValueError(f"line {lineno}: malformed tree header {line!r}")
            scale, index, num, den = (int(p) for p in parts[:4])
            header = (
                DyadicInterval(scale, index),
                DyadicPoint.from_value(Fraction(num, den)),
                TreeKind(parts[4]),
            )
            members = []
        elif header is None:
            raise ValueError(f"line {lineno}: bitile before any tree header")
        else:
            members.append(_parse_bitile(line, lineno))
    close()
    return Forest(tuple(trees))
