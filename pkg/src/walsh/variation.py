"""Jump counts, r-variation norms and square functions of martingale averages.

All chain quantities are exact dynamic programs over the ordered index set.
The kernels work on stacks of shape (levels, X, d), so a field over all grid
cells costs the same number of numpy passes as a single sequence.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from walsh.dyadic_core import (
    DyadicInterval,
    Grid,
    StepFunction,
    conditional_expectation,
    martingale_averages,
)
from walsh.errors import PartitionError

logger = logging.getLogger(__name__)


def _check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")


def _check_exponent(r: float) -> None:
    if not r > 1:
        raise ValueError(f"variation exponent must exceed 1, got {r}")


def _distances_to(points: np.ndarray, j: int) -> np.ndarray:
    """|g_j - g_i|_H for all i < j, shape (j, X)."""
    return np.linalg.norm(points[:j] - points[j], axis=-1)


def longest_jump_chains(points: np.ndarray, lam: float, anchored: bool = False) -> np.ndarray:
    """Longest chains with all consecutive jumps >= lam, per column X."""
    n, width = points.shape[:2]
    best = np.zeros((n, width), dtype=int)
    if anchored:
        best[1:] = -1
    for j in range(1, n):
        dist = _distances_to(points, j)
        reachable = (dist >= lam) & (best[:j] >= 0)
        candidate = np.where(reachable, best[:j] + 1, -1).max(axis=0)
        best[j] = np.maximum(best[j], candidate)
    return best.max(axis=0)


def greedy_jump_counts(points: np.ndarray, lam: float) -> np.ndarray:
    """Select every next index that moves >= lam/2 from the last selection."""
    last = points[0].copy()
    count = np.zeros(points.shape[1], dtype=int)
    for j in range(1, points.shape[0]):
        jump = np.linalg.norm(points[j] - last, axis=-1) >= lam / 2
        count += jump
        last = np.where(jump[:, np.newaxis], points[j], last)
    return count


def max_chain_rsums(points: np.ndarray, r: float, anchored: bool = False) -> np.ndarray:
    """max over chains of sum |g_{k_m} - g_{k_{m-1}}|^r, per column X."""
    n, width = points.shape[:2]
    best = np.zeros((n, width))
    if anchored:
        best[1:] = -np.inf
    for j in range(1, n):
        candidate = (best[:j] + _distances_to(points, j) ** r).max(axis=0)
        best[j] = np.maximum(best[j], candidate)
    return best.max(axis=0)


def variation_of_points(points: np.ndarray, r: float, anchored: bool = False) -> np.ndarray:
    """sup_k |g_k| + (chain supremum)^(1/r), per column X."""
    sup = np.linalg.norm(points, axis=-1).max(axis=0)
    return sup + max_chain_rsums(points, r, anchored) ** (1.0 / r)


@dataclass(frozen=True, eq=False)
class KSequence:
    """A finite sequence k -> g_k in H = R^d, stored in decreasing k.

    With with_infinity the implicit first entry g_inf = 0 is part of the
    sequence.
    """

    keys: Tuple[int, ...]
    values: np.ndarray
    with_infinity: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, np.newaxis]
        keys = tuple(int(k) for k in self.keys)
        if values.ndim != 2 or values.shape[0] != len(keys):
            raise ValueError(f"{len(keys)} keys for values of shape {values.shape}")
        if any(a <= b for a, b in zip(keys, keys[1:])):
            raise ValueError("keys must be strictly decreasing")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "keys", keys)

    @classmethod
    def from_values(
        cls,
        values: Sequence,
        keys: Optional[Sequence[int]] = None,
        with_infinity: bool = False,
    ) -> "KSequence":
        values = np.asarray(values, dtype=float)
        if keys is None:
            keys = range(len(values) - 1, -1, -1)
        return cls(tuple(keys), values, with_infinity)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def points(self) -> np.ndarray:
        """Traversal-ordered points, shape (levels, 1, d)."""
        pts = self.values
        if self.with_infinity:
            pts = np.vstack([np.zeros((1, self.dim)), pts])
        return pts[:, np.newaxis, :]

    def __len__(self) -> int:
        return len(self.keys)


def jump_count_max(s: KSequence, lam: float, anchor_at_infinity: bool = False) -> int:
    """Exact M_lambda: longest chain k_0 > k_1 > ... with jumps >= lambda.

    anchor_at_infinity forces k_0 to be the first entry (inf when present).
    """
    _check_positive("lambda", lam)
    if len(s) == 0 and not s.with_infinity:
        return 0
    return int(longest_jump_chains(s.points(), lam, anchor_at_infinity)[0])


def jump_count_greedy(s: KSequence, lam: float, direction: str = "descending") -> int:
    """Count of lambda/2 jumps picked greedily from k_0 = inf (or the first key).

    direction="ascending" runs the same selection from the finest key upward.
    Always dominates jump_count_max(s, lam).
    """
    _check_positive("lambda", lam)
    points = s.points()
    if direction == "ascending":
        points = points[::-1]
    elif direction != "descending":
        raise ValueError(f"unknown direction {direction!r}")
    if points.shape[0] == 0:
        return 0
    return int(greedy_jump_counts(points, lam)[0])


def variation_norm(s: KSequence, r: float, anchor_at_infinity: bool = False) -> float:
    """||g_k||_{V^r(k)} = sup_k |g_k| + sup over chains (sum |jumps|^r)^(1/r)."""
    _check_exponent(r)
    points = s.points()
    if points.shape[0] == 0:
        return 0.0
    return float(variation_of_points(points, r, anchor_at_infinity)[0])


def weak_variation_norm(s: KSequence, r: float, anchor_at_infinity: bool = False) -> float:
    """sup_k |g_k| + sup_lambda lambda M_lambda^(1/r).

    lambda M_lambda^(1/r) is maximal at a pairwise distance, so only those
    values are scanned.
    """
    _check_exponent(r)
    points = s.points()
    if points.shape[0] == 0:
        return 0.0
    flat = points[:, 0, :]
    sup = float(np.linalg.norm(flat, axis=-1).max())
    diffs = np.linalg.norm(flat[:, np.newaxis] - flat[np.newaxis, :], axis=-1)
    best = 0.0
    for lam in np.unique(diffs[diffs > 0]):
        count = longest_jump_chains(points, float(lam), anchor_at_infinity)[0]
        best = max(best, float(lam) * count ** (1.0 / r))
    return sup + best


def martingale_jump_field(f: StepFunction, lam: float, anchor_at_infinity: bool = True) -> StepFunction:
    """x -> M_lambda(x) for the sequence E(f|D_k)(x), k = inf, J, ..., -K."""
    _check_positive("lambda", lam)
    _, stack = martingale_averages(f, include_infinity=True)
    counts = longest_jump_chains(stack, lam, anchor_at_infinity)
    return StepFunction(f.grid, counts.astype(float))


def martingale_greedy_field(f: StepFunction, lam: float) -> StepFunction:
    """x -> greedy lambda/2 count along E(f|D_k)(x) starting from k_0 = inf."""
    _check_positive("lambda", lam)
    _, stack = martingale_averages(f, include_infinity=True)
    return StepFunction(f.grid, greedy_jump_counts(stack, lam).astype(float))


def martingale_variation_field(
    f: StepFunction, r: float, include_infinity: bool = True
) -> StepFunction:
    """x -> ||E(f|D_k)(x)||_{V^r(k)}."""
    _check_exponent(r)
    _, stack = martingale_averages(f, include_infinity=include_infinity)
    return StepFunction(f.grid, variation_of_points(stack, r))


def haar_intervals(grid: Grid) -> List[DyadicInterval]:
    """Intervals whose Haar function the grid resolves: scales J .. 1-K."""
    return grid.time_intervals(min_scale=1 - grid.K)


def haar_coefficients(f: StepFunction) -> Dict[DyadicInterval, np.ndarray]:
    """<f, h_I> for every resolvable dyadic interval I."""
    grid = f.grid
    tail = f.values.shape[1:]
    coeffs: Dict[DyadicInterval, np.ndarray] = {}
    for scale in range(grid.J, -grid.K, -1):
        width = 1 << (scale + grid.K)
        halves = f.values.reshape((grid.size // width, 2, width // 2) + tail).sum(axis=2)
        weights = (halves[:, 0] - halves[:, 1]) * f.cell_width * 2.0 ** (-scale / 2)
        for m in range(grid.size // width):
            coeffs[DyadicInterval(scale, m)] = weights[m]
    return coeffs


def _validate_groups(grid: Grid, groups: Sequence[Sequence[DyadicInterval]]) -> None:
    expected = set(haar_intervals(grid))
    seen = set()
    for block in groups:
        for interval in block:
            if interval in seen:
                raise PartitionError(f"{interval} appears in more than one block")
            if interval not in expected:
                raise PartitionError(f"{interval} is not a Haar interval of {grid}")
            seen.add(interval)
    if seen != expected:
        raise PartitionError(f"{len(expected - seen)} Haar intervals are not in any block")


def signed_haar_square_function(
    f: StepFunction,
    signs: Optional[Mapping[DyadicInterval, int]] = None,
    groups: Optional[Iterable[Iterable[DyadicInterval]]] = None,
) -> StepFunction:
    """x -> (sum_blocks |sum_{I in block} eps_I <f,h_I> h_I(x)|_H^2)^(1/2).

    Missing signs default to +1; without groups every interval is its own block.
    """
    grid = f.grid
    signs = signs or {}
    if groups is None:
        blocks = [[interval] for interval in haar_intervals(grid)]
    else:
        blocks = [list(block) for block in groups]
    _validate_groups(grid, blocks)
    coeffs = haar_coefficients(f)
    tail = f.values.shape[1:]
    total = np.zeros(grid.size)
    for block in blocks:
        partial = np.zeros((grid.size,) + tail)
        for interval in block:
            cells = grid.time_slice(interval)
            half = (cells.stop - cells.start) // 2
            amplitude = signs.get(interval, 1) * coeffs[interval] * float(interval.length) ** -0.5
            partial[cells.start:cells.start + half] += amplitude
            partial[cells.start + half:cells.stop] -= amplitude
        norms = np.linalg.norm(partial, axis=1) if tail else np.abs(partial)
        total += norms ** 2
    return StepFunction(grid, np.sqrt(total))


def sharp_maximal(g: StepFunction) -> StepFunction:
    """g#(x) = sup_{x in I} (avg_I |g|^2 - |avg_I g|^2)^(1/2)."""
    grid = g.grid
    squares = g.with_values(g.pointwise_norm() ** 2)
    best = np.zeros(grid.size)
    for k in range(-grid.K, grid.J + 1):
        mean = conditional_expectation(g, k)
        variance = conditional_expectation(squares, k).values - mean.pointwise_norm() ** 2
        best = np.maximum(best, np.sqrt(np.clip(variance, 0.0, None)))
    return StepFunction(grid, best)


def product_variation_bound(a: np.ndarray, b: np.ndarray, r: float) -> Tuple[float, float]:
    """Both sides of ||a_k * b_k||_{V^r} <~ (sum_xi V^r(a_xi)^2 V^r(b_xi)^2)^(1/2).

    a and b have shape (levels, |Xi|), k along axis 0. For r >= 2 the left
    side never exceeds twice the right side.
    """
    _check_exponent(r)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"mismatched shapes {a.shape} and {b.shape}")
    lhs = float(variation_of_points((a * b)[:, np.newaxis, :], r)[0])
    per_xi_a = variation_of_points(a[:, :, np.newaxis], r)
    per_xi_b = variation_of_points(b[:, :, np.newaxis], r)
    rhs = math.sqrt(float(np.sum(per_xi_a ** 2 * per_xi_b ** 2)))
    return lhs, rhs
