"""Size of bitile collections, greedy forest selection and exceptional sets."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from walsh.dyadic_core import DyadicInterval, Grid, StepFunction, maximal_function
from walsh.errors import CoverageError, NonTermination, NotATwoTree
from walsh.tile_geometry import (
    Bitile,
    Forest,
    Tree,
    TreeKind,
    counting_field,
    maximal_tree,
    tree_partial_sum,
)
from walsh.variation import variation_of_points

logger = logging.getLogger(__name__)

# relative slack on size comparisons; rounding must not lift a size tie over 2^-n
SIZE_TOLERANCE = 1e-12


def lower_tile_coefficients(bitiles: Iterable[Bitile], f: StepFunction) -> Dict[Bitile, float]:
    """a_P = <f, w_{P_1}> for every bitile."""
    grid = f.grid
    coeffs = {}
    for P in bitiles:
        cells = grid.time_slice(P.time)
        signs = grid.character_signs(grid.frequency_slice(P.freq_lower).start)
        amplitude = float(P.time.length) ** -0.5
        coeffs[P] = float(np.dot(f.values[cells], signs[cells]) * amplitude * f.cell_width)
    return coeffs


def tree_size(tree: Tree, f: StepFunction, coeffs: Optional[Mapping[Bitile, float]] = None) -> float:
    """(|I_T|^-1 sum_{P in T} |<f, w_{P_1}>|^2)^(1/2) for a 2-tree."""
    if tree.kind is not TreeKind.TWO:
        raise NotATwoTree(f"size is defined on 2-trees, got a {tree.kind.value}")
    for P in tree.bitiles:
        if not tree.admits(P):
            raise NotATwoTree(f"{P} does not point at {tree.top_time} x {tree.top_freq} through its upper half")
    if coeffs is None:
        coeffs = lower_tile_coefficients(tree.bitiles, f)
    energy = sum(coeffs[P] ** 2 for P in tree.bitiles)
    return math.sqrt(energy / float(tree.top_time.length))


class TopTable:
    """Energy of every maximal 2-tree, indexed by (top interval, top frequency cell).

    Row order follows grid.time_intervals (coarse scales first). A bitile P
    feeds every row whose interval contains I_P and every column inside
    omega_{P,2}.
    """

    def __init__(self, grid: Grid, coeffs: Mapping[Bitile, float]):
        self.grid = grid
        self.intervals = grid.time_intervals(min_scale=1 - grid.K)
        self._rows = {interval: n for n, interval in enumerate(self.intervals)}
        self.lengths = np.array([float(interval.length) for interval in self.intervals])
        self.lefts = np.array([float(interval.left) for interval in self.intervals])
        self._footprints: Dict[Bitile, np.ndarray] = {}
        self._weights: Dict[Bitile, float] = {}
        for P, a in coeffs.items():
            self._footprints[P] = self._footprint(P)
            self._weights[P] = a * a

    def _footprint(self, P: Bitile) -> np.ndarray:
        grid = self.grid
        grid.time_slice(P.time)  # raises TileOutsideGrid
        columns = np.arange(grid.size)[grid.frequency_slice(P.freq_upper)]
        rows = []
        interval = P.time
        while interval.scale <= grid.J:
            rows.append(self._rows[interval])
            interval = interval.parent
        return (np.array(rows)[:, np.newaxis] * grid.size + columns[np.newaxis, :]).ravel()

    def energy(self, members: Iterable[Bitile]) -> np.ndarray:
        members = list(members)
        shape = (len(self.intervals), self.grid.size)
        if not members:
            return np.zeros(shape)
        index = np.concatenate([self._footprints[P] for P in members])
        weights = np.concatenate([np.full(self._footprints[P].size, self._weights[P]) for P in members])
        return np.bincount(index, weights=weights, minlength=shape[0] * shape[1]).reshape(shape)

    def squared_sizes(self, members: Iterable[Bitile]) -> np.ndarray:
        return self.energy(members) / self.lengths[:, np.newaxis]

    def max_size(self, members: Iterable[Bitile]) -> float:
        return math.sqrt(float(self.squared_sizes(members).max(initial=0.0)))


def collection_size(
    bitiles: Iterable[Bitile], f: StepFunction, coeffs: Optional[Mapping[Bitile, float]] = None
) -> float:
    """sup of tree_size over the maximal 2-trees of every grid top (I, xi)."""
    bitiles = list(bitiles)
    if not bitiles:
        return 0.0
    if coeffs is None:
        coeffs = lower_tile_coefficients(bitiles, f)
    return TopTable(f.grid, {P: coeffs[P] for P in bitiles}).max_size(bitiles)


def _level_for(size: float) -> int:
    """Largest n with size <= 2^-n."""
    n = math.floor(-math.log2(size))
    while 2.0 ** -n * (1 + SIZE_TOLERANCE) < size:
        n -= 1
    while 2.0 ** -(n + 1) * (1 + SIZE_TOLERANCE) >= size:
        n += 1
    return n


@dataclass(frozen=True)
class SizedForestLevel:
    n: int
    bitiles: FrozenSet[Bitile]
    forest: Forest
    two_tree_forest: Forest
    one_tree_forest: Forest
    bessel_ratio: float
    residual: bool = False

    @property
    def top_measure(self) -> float:
        return float(sum(tree.top_time.length for tree in self.forest))


def _pick_top(table: TopTable, mask: np.ndarray) -> Tuple[DyadicInterval, int]:
    """Minimal frequency cell, then smaller left endpoint, then longer interval."""
    column = int(np.flatnonzero(mask.any(axis=0))[0])
    rows = np.flatnonzero(mask[:, column])
    order = np.lexsort((-table.lengths[rows], table.lefts[rows]))
    return table.intervals[int(rows[order[0]])], column


def select_forest(bitiles: Iterable[Bitile], f: StepFunction) -> List[SizedForestLevel]:
    """Split S into levels n = Delta, Delta+1, ... of collection size <= 2^-n.

    At level n, maximal trees are removed while some maximal 2-tree of the
    remaining bitiles has size > 2^(-n-1). Bitiles whose coefficients all
    vanish end up in a trailing residual level.
    """
    grid = f.grid
    remaining = set(bitiles)
    total = len(remaining)
    if not remaining:
        return []
    coeffs = lower_tile_coefficients(remaining, f)
    table = TopTable(grid, coeffs)
    norm2 = f.l2_norm() ** 2
    levels: List[SizedForestLevel] = []
    size = table.max_size(remaining)
    n = _level_for(size) if size > 0 else 0
    selections = 0
    while remaining and size > 0:
        threshold = 4.0 ** -(n + 1)
        trees: List[Tree] = []
        while True:
            mask = table.squared_sizes(remaining) > threshold * (1 + SIZE_TOLERANCE)
            if not mask.any():
                break
            selections += 1
            if selections > total:
                raise NonTermination(f"more than {total} tree selections for {total} bitiles")
            top_time, column = _pick_top(table, mask)
            tree = maximal_tree(remaining, top_time, grid.frequency_point(column))
            remaining -= tree.bitiles
            trees.append(tree)
            logger.debug("level %d: selected tree %s x %s with %d bitiles",
                         n, top_time, grid.frequency_point(column), len(tree))
        if trees:
            levels.append(_sized_level(n, trees, norm2))
        size = table.max_size(remaining)
        if size > 0:
            n = max(n + 1, _level_for(size))
    if remaining:
        residual_n = levels[-1].n + 1 if levels else n
        forest = Forest(())
        levels.append(
            SizedForestLevel(residual_n, frozenset(remaining), forest, forest, forest, 0.0, residual=True)
        )
        logger.debug("%d bitiles with vanishing coefficients in residual level", len(remaining))
    return levels


def _sized_level(n: int, trees: List[Tree], norm2: float) -> SizedForestLevel:
    two_trees = []
    one_trees = []
    for tree in trees:
        two_trees.append(maximal_tree(tree.bitiles, tree.top_time, tree.top_freq, TreeKind.TWO))
        one_trees.append(maximal_tree(tree.bitiles, tree.top_time, tree.top_freq, TreeKind.ONE))
    forest = Forest(tuple(trees))
    measure = float(sum(tree.top_time.length for tree in trees))
    ratio = measure / (4.0 ** n * norm2) if norm2 > 0 else 0.0
    return SizedForestLevel(
        n,
        forest.bitiles(),
        forest,
        Forest(tuple(two_trees)),
        Forest(tuple(one_trees)),
        ratio,
    )


@dataclass(frozen=True)
class SplitForest:
    one_tree_bitiles: FrozenSet[Bitile]
    one_tree_forest: Forest
    two_tree_bitiles: FrozenSet[Bitile]
    two_tree_forest: Forest


def split_forest(bitiles: Iterable[Bitile], forest: Forest) -> SplitForest:
    """Split S into a union of maximal 2-trees and a union of 1-trees.

    Every T contributes T2 = {P in S : I_P in I_T, xi_T in omega_{P,2}};
    what is left is handed out to T1 = {P : I_P in I_T, xi_T in omega_{P,1}}
    in forest order.
    """
    bitiles = frozenset(bitiles)
    two_trees = [
        maximal_tree(bitiles, tree.top_time, tree.top_freq, TreeKind.TWO) for tree in forest
    ]
    two_tree_bitiles = frozenset(P for tree in two_trees for P in tree.bitiles)
    unassigned = set(bitiles - two_tree_bitiles)
    one_trees = []
    for tree in forest:
        one_tree = maximal_tree(unassigned, tree.top_time, tree.top_freq, TreeKind.ONE)
        unassigned -= one_tree.bitiles
        one_trees.append(one_tree)
    if unassigned:
        raise CoverageError(f"{len(unassigned)} bitiles belong to no tree of the forest, "
                            f"e.g. {min(unassigned)}")
    one_tree_bitiles = frozenset(P for tree in one_trees for P in tree.bitiles)
    return SplitForest(one_tree_bitiles, Forest(tuple(one_trees)),
                       two_tree_bitiles, Forest(tuple(two_trees)))


@dataclass(frozen=True, eq=False)
class ExceptionalSet:
    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.shape != (self.grid.size,):
            raise ValueError(f"mask of shape {mask.shape} for {self.grid.size} cells")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def empty(cls, grid: Grid) -> "ExceptionalSet":
        return cls(grid, np.zeros(grid.size, dtype=bool))

    @property
    def cells(self) -> Tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(self.mask))

    @property
    def measure(self) -> float:
        return self.grid.time_width * int(self.mask.sum())

    def __contains__(self, cell: int) -> bool:
        return bool(self.mask[cell])

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __or__(self, other: "ExceptionalSet") -> "ExceptionalSet":
        return ExceptionalSet(self.grid, self.mask | other.mask)


def exceptional_counting(forest: Forest, beta: float, grid: Grid) -> ExceptionalSet:
    """{x : sum_T 1_{I_T}(x) > beta}."""
    if beta < 1:
        raise ValueError(f"beta must be at least 1, got {beta}")
    return ExceptionalSet(grid, counting_field(forest, grid) > beta)


def truncated_tree_sums(
    tree: Tree, coeffs: Mapping[Bitile, float], grid: Grid, strict: bool = True
) -> np.ndarray:
    """Stack of x -> sum_{P in T, |I_P| < 2^k} a_P w_{P_1}(x), k decreasing.

    k runs from the full sum down to the empty one. strict=False truncates
    at |I_P| <= 2^k, which shifts k by one and yields the same family.
    """
    if not tree.bitiles:
        return np.zeros((1, grid.size))
    scales = [P.time.scale for P in tree.bitiles]
    low, high = min(scales), max(scales)
    keys = range(high + 1, low - 1, -1) if strict else range(high, low - 2, -1)
    return np.array([tree_partial_sum(tree, coeffs, grid, k, strict).values for k in keys])


def tree_variation_field(
    tree: Tree, coeffs: Mapping[Bitile, float], grid: Grid, r: float, strict: bool = True
) -> StepFunction:
    """x -> || sum_{P in T, |I_P| < 2^k} a_P w_{P_1}(x) ||_{V^r(k)}."""
    stack = truncated_tree_sums(tree, coeffs, grid, strict)
    return StepFunction(grid, variation_of_points(stack[:, :, np.newaxis], r))


def exceptional_variation(
    forest: Forest,
    coeffs: Mapping[Bitile, float],
    gamma: float,
    r: float,
    grid: Grid,
    strict: bool = True,
) -> ExceptionalSet:
    """Union over the 2-trees of {x : V^r of the truncated tree sums > gamma}."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not r > 2:
        raise ValueError(f"r must exceed 2, got {r}")
    mask = np.zeros(grid.size, dtype=bool)
    for tree in forest:
        mask |= tree_variation_field(tree, coeffs, grid, r, strict).values > gamma
    return ExceptionalSet(grid, mask)


def exceptional_maximal(cells: Iterable[int], p: float, lam: float, grid: Grid) -> ExceptionalSet:
    """{x : M_p 1_F(x) >= lambda}."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    indicator = np.zeros(grid.size)
    indicator[list(cells)] = 1.0
    maximal = maximal_function(StepFunction(grid, indicator), p)
    return ExceptionalSet(grid, maximal.values >= lam)
