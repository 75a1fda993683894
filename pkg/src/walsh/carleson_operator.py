"""The operators W and W^max over a bitile collection, and the checks built on them."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from walsh.dyadic_core import Grid, StepFunction
from walsh.errors import InstanceTooLarge, PreconditionViolated
from walsh.maximal_multiplier import (
    MultiplierFamily,
    m2star_lower,
    m2star_oracle,
    m2star_upper,
)
from walsh.seeding import derive_seed
from walsh.size_selection import (
    ExceptionalSet,
    exceptional_counting,
    exceptional_maximal,
    exceptional_variation,
    lower_tile_coefficients,
    select_forest,
    split_forest,
)
from walsh.tile_geometry import Bitile, Forest, all_bitiles, counting_field, tile_le, wave_packet

logger = logging.getLogger(__name__)

MODES = ("ascent", "oracle")
WEAK_TYPE_R = 2.5
WEAK_TYPE_EPS = 0.1


@dataclass(frozen=True, eq=False)
class PointMultiplierFamily:
    """k -> m_k(theta) = sum_{|I_P| < 2^k} a_P w_{P_1}(x) 1_{omega_{P,2}}(theta) at one cell x."""

    grid: Grid
    x: int
    keys: Tuple[int, ...]
    members: np.ndarray

    def as_family(self) -> MultiplierFamily:
        return MultiplierFamily(self.grid, self.members, self.keys)


def _truncation_stack(
    bitiles: List[Bitile], coeffs: Mapping[Bitile, float], grid: Grid
) -> Tuple[Tuple[int, ...], np.ndarray]:
    """All distinct truncations at once, shape (members, x cells, theta cells)."""
    scales = sorted({P.time.scale for P in bitiles})
    if not scales:
        return (0,), np.zeros((1, grid.size, grid.size))
    by_scale = {scale: np.zeros((grid.size, grid.size)) for scale in scales}
    for P in bitiles:
        packet = wave_packet(P.lower, grid).values
        cells = grid.time_slice(P.time)
        band = grid.frequency_slice(P.freq_upper)
        by_scale[P.time.scale][cells, band] += (coeffs[P] * packet[cells])[:, np.newaxis]
    keys = [scales[0]]
    stack = [np.zeros((grid.size, grid.size))]
    for scale in scales:
        keys.append(scale + 1)
        stack.append(stack[-1] + by_scale[scale])
    return tuple(keys), np.array(stack)


def multiplier_family_at_x(
    bitiles: Iterable[Bitile],
    f: StepFunction,
    x: int,
    coeffs: Optional[Mapping[Bitile, float]] = None,
) -> PointMultiplierFamily:
    """Distinct truncations k of the W^max multiplier sequence at cell x.

    The first member (k = smallest scale) is the empty sum, the last is the
    full sum; in between one member per bitile scale.
    """
    bitiles = sorted(bitiles)
    if coeffs is None:
        coeffs = lower_tile_coefficients(bitiles, f)
    keys, stack = _truncation_stack(bitiles, coeffs, f.grid)
    return PointMultiplierFamily(f.grid, x, keys, stack[:, x, :])


def carleson_W(bitiles: Iterable[Bitile], f: StepFunction) -> StepFunction:
    """x -> sup_theta |sum_P <f, w_{P_1}> w_{P_1}(x) 1_{omega_{P,2}}(theta)|."""
    bitiles = sorted(bitiles)
    coeffs = lower_tile_coefficients(bitiles, f)
    _, stack = _truncation_stack(bitiles, coeffs, f.grid)
    return StepFunction(f.grid, np.abs(stack[-1]).max(axis=1))


@dataclass(frozen=True, eq=False)
class WmaxField:
    """Certified lower and upper bounds for W^max f; exact marks cells solved by the oracle."""

    lower: StepFunction
    upper: StepFunction
    exact: np.ndarray


def _point_value(
    family: MultiplierFamily, mode: str, restarts: int, seed: int
) -> Tuple[float, bool]:
    """(estimate, exact); exact is False when the oracle was skipped or too large."""
    if mode == "oracle":
        try:
            return m2star_oracle(family), True
        except InstanceTooLarge:
            pass
    value, _ = m2star_lower(family, restarts=restarts, seed=seed)
    return value, False


def carleson_Wmax(
    bitiles: Iterable[Bitile],
    f: StepFunction,
    mode: str = "ascent",
    restarts: int = 4,
    seed: int = 0,
) -> WmaxField:
    """x -> ||(m_k)_k||_{M2*} for the per-point multiplier families.

    mode="oracle" solves small families exactly and falls back to the
    ascent estimator where the oracle would be too large.
    """
    if mode not in MODES:
        raise ValueError(f"unknown estimator mode {mode!r}, expected one of {MODES}")
    grid = f.grid
    bitiles = sorted(bitiles)
    coeffs = lower_tile_coefficients(bitiles, f)
    keys, stack = _truncation_stack(bitiles, coeffs, grid)
    lower = np.zeros(grid.size)
    upper = np.zeros(grid.size)
    exact = np.zeros(grid.size, dtype=bool)
    for x in range(grid.size):
        members = stack[:, x, :]
        if not members.any():
            exact[x] = True
            continue
        family = MultiplierFamily(grid, members, keys)
        lower[x], exact[x] = _point_value(family, mode, restarts, derive_seed(seed, x))
        upper[x] = m2star_upper(family)
    inexact = grid.size - int(exact.sum())
    if mode == "oracle" and inexact:
        logger.warning("oracle too large at %d of %d cells of %s, using the ascent estimate there",
                       inexact, grid.size, grid)
    logger.debug("W^max on %s: %d of %d cells exact", grid, grid.size - inexact, grid.size)
    return WmaxField(StepFunction(grid, lower), StepFunction(grid, upper), exact)


def frequency_stack(bitiles: Iterable[Bitile], grid: Grid, x: int, theta: int) -> List[Bitile]:
    """{P : x in I_P, theta in omega_{P,2}}, finest time interval first."""
    point = grid.time_point(x)
    freq = grid.frequency_point(theta)
    members = [P for P in bitiles if P.time.contains_point(point) and P.freq_upper.contains_point(freq)]
    return sorted(members, key=lambda P: (P.time.scale, P.time.index))


def is_chain(bitiles: List[Bitile]) -> bool:
    """True when the bitiles are totally ordered by tile_le."""
    return all(tile_le(P, Q) or tile_le(Q, P) for i, P in enumerate(bitiles) for Q in bitiles[i + 1:])


def _check_sigma(bitiles: Iterable[Bitile], coeffs: Mapping[Bitile, float], sigma: float) -> None:
    for P in bitiles:
        density = abs(coeffs[P]) / math.sqrt(float(P.time.length))
        if density > sigma * (1 + 1e-12):
            raise PreconditionViolated(f"|a_P|/|I_P|^(1/2) = {density:.6g} exceeds sigma = {sigma:.6g} at {P}")


def tree_exceptional_set(
    bitiles: Iterable[Bitile],
    forest: Forest,
    coeffs: Mapping[Bitile, float],
    r: float,
    beta: float,
    gamma: float,
    grid: Grid,
) -> ExceptionalSet:
    """E^(1) u E^(2): heavy tree counts plus large tree variation on the 2-tree part."""
    split = split_forest(bitiles, forest)
    counting = exceptional_counting(forest, beta, grid)
    variation = exceptional_variation(split.two_tree_forest, coeffs, gamma, r, grid)
    return counting | variation


def pointwise_tree_bound_check(
    bitiles: Iterable[Bitile],
    forest: Forest,
    f: StepFunction,
    r: float,
    beta: float,
    gamma: float,
    sigma: float,
    x: int,
    mode: str = "oracle",
    restarts: int = 4,
    seed: int = 0,
) -> float:
    """W^max f(x) / ((sigma + gamma) beta^(r/4 - 1/2)) at a cell outside the exceptional sets."""
    grid = f.grid
    bitiles = sorted(bitiles)
    coeffs = lower_tile_coefficients(bitiles, f)
    _check_sigma(bitiles, coeffs, sigma)
    excluded = tree_exceptional_set(bitiles, forest, coeffs, r, beta, gamma, grid)
    if x in excluded:
        raise PreconditionViolated(f"cell {x} lies in the exceptional set")
    family = multiplier_family_at_x(bitiles, f, x, coeffs).as_family()
    value = 0.0
    if family.members.any():
        value, exact = _point_value(family, mode, restarts, derive_seed(seed, x))
        if mode == "oracle" and not exact:
            logger.warning("oracle too large at cell %d, using the ascent estimate", x)
    return value / ((sigma + gamma) * beta ** (r / 4 - 0.5))


def tree_bound_ratios(
    bitiles: Iterable[Bitile],
    forest: Forest,
    f: StepFunction,
    r: float,
    beta: float,
    gamma: float,
    sigma: float,
    wmax: WmaxField,
) -> Tuple[np.ndarray, ExceptionalSet]:
    """pointwise_tree_bound_check over every cell from a precomputed W^max field.

    Cells inside the exceptional set come back as nan.
    """
    grid = f.grid
    bitiles = sorted(bitiles)
    coeffs = lower_tile_coefficients(bitiles, f)
    _check_sigma(bitiles, coeffs, sigma)
    excluded = tree_exceptional_set(bitiles, forest, coeffs, r, beta, gamma, grid)
    ratios = wmax.lower.values / ((sigma + gamma) * beta ** (r / 4 - 0.5))
    return np.where(excluded.mask, np.nan, ratios), excluded




def _check_r(r: float) -> None:
    if not r > 2:
        raise ValueError(f"r must exceed 2, got {r}")


def two_tree_bound_ratios(
    bitiles: Iterable[Bitile],
    forest: Forest,
    f: StepFunction,
    r: float,
    beta: float,
    gamma: float,
    mode: str = "oracle",
    restarts: int = 4,
    seed: int = 0,
) -> Tuple[np.ndarray, ExceptionalSet]:
    """W^max over the 2-tree part S^(2) divided by gamma beta^(r/4 - 1/2).

    S^(2) and its maximal 2-trees come from split_forest. E^(1) counts those
    trees and E^(2) is their tree variation above gamma; cells in
    E^(1) u E^(2) come back as nan.
    """
    _check_r(r)
    grid = f.grid
    split = split_forest(bitiles, forest)
    part = sorted(split.two_tree_bitiles)
    coeffs = lower_tile_coefficients(part, f)
    excluded = exceptional_counting(split.two_tree_forest, beta, grid) | exceptional_variation(
        split.two_tree_forest, coeffs, gamma, r, grid
    )
    wmax = carleson_Wmax(part, f, mode, restarts, seed)
    ratios = wmax.lower.values / (gamma * beta ** (r / 4 - 0.5))
    return np.where(excluded.mask, np.nan, ratios), excluded


def one_tree_bound_ratios(
    bitiles: Iterable[Bitile],
    forest: Forest,
    f: StepFunction,
    r: float,
    beta: float,
    sigma: float,
    mode: str = "oracle",
    restarts: int = 4,
    seed: int = 0,
) -> Tuple[np.ndarray, ExceptionalSet]:
    """W^max over the 1-tree part S^(1) divided by sigma beta^(r/4 - 1/2).

    E counts the trees of split.one_tree_forest; cells in E come back as nan.
    sigma must dominate |a_P| / |I_P|^(1/2) on S^(1).
    """
    _check_r(r)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    grid = f.grid
    split = split_forest(bitiles, forest)
    part = sorted(split.one_tree_bitiles)
    coeffs = lower_tile_coefficients(part, f)
    _check_sigma(part, coeffs, sigma)
    excluded = exceptional_counting(split.one_tree_forest, beta, grid)
    wmax = carleson_Wmax(part, f, mode, restarts, seed)
    ratios = wmax.lower.values / (sigma * beta ** (r / 4 - 0.5))
    return np.where(excluded.mask, np.nan, ratios), excluded


@dataclass(frozen=True)
class WeakTypeLevel:
    """E^(1)_n and E^(2)_n of one level of S_1 with the parameters that built them."""

    n: int
    sigma: float
    beta: float
    gamma: float
    trees: int
    counting: ExceptionalSet
    variation: ExceptionalSet


@dataclass(frozen=True)
class WeakTypeExceptionalSets:
    """E = {M_p 1_F >= lambda} (empty for lambda > 1), S_1 and the per-level sets.

    star is E^* = union over the levels of E^(1)_n u E^(2)_n.
    """

    first: ExceptionalSet
    bitiles: FrozenSet[Bitile]
    levels: Tuple[WeakTypeLevel, ...]
    star: ExceptionalSet

    @property
    def excluded(self) -> ExceptionalSet:
        return self.first | self.star


def weak_type_exceptional_sets(
    cells: Iterable[int],
    p: float,
    lam: float,
    grid: Grid,
    bitiles: Optional[Iterable[Bitile]] = None,
    r: float = WEAK_TYPE_R,
    eps: float = WEAK_TYPE_EPS,
) -> WeakTypeExceptionalSets:
    """The exceptional sets of the weak-type estimate for 1_F at height lambda.

    lambda <= 1: S_1 = {P : I_P not inside E}, sizes against 1_F, and level
    n of select_forest(S_1) gets sigma = 2^-n, beta = 2^(3n) lambda^p and
    gamma = 2^(-n/2) lambda^(1/2 - eps).

    lambda > 1: S_1 = S, sizes against lambda^-1 1_F, sigma = 2^-n,
    beta = 2^((p+1)n) and gamma = 2^(-n/2).

    E^(1)_n is where more than beta trees of the level overlap, E^(2)_n where
    the tree variation on the 2-tree part of the level exceeds gamma.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    _check_r(r)
    cells = sorted(set(int(c) for c in cells))
    indicator = np.zeros(grid.size)
    indicator[cells] = 1.0
    if bitiles is None:
        bitiles = all_bitiles(grid)
    if lam <= 1:
        first = exceptional_maximal(cells, p, lam, grid)
        g = StepFunction(grid, indicator)
    else:
        first = ExceptionalSet.empty(grid)
        g = StepFunction(grid, indicator / lam)
    kept = frozenset(P for P in bitiles if not first.mask[grid.time_slice(P.time)].all())
    coeffs = lower_tile_coefficients(kept, g)

    levels = []
    star = ExceptionalSet.empty(grid)
    for level in select_forest(kept, g):
        if level.residual:
            continue
        n = level.n
        if lam <= 1:
            beta = 2.0 ** (3 * n) * lam ** p
            gamma = 2.0 ** (-n / 2) * lam ** (0.5 - eps)
        else:
            beta = 2.0 ** ((p + 1) * n)
            gamma = 2.0 ** (-n / 2)
        split = split_forest(level.bitiles, level.forest)
        counting = ExceptionalSet(grid, counting_field(level.forest, grid) > beta)
        variation = exceptional_variation(split.two_tree_forest, coeffs, gamma, r, grid)
        levels.append(WeakTypeLevel(n, 2.0 ** -n, beta, gamma, len(level.forest), counting, variation))
        star = star | counting | variation
        logger.debug("weak type level %d: beta %.4g gamma %.4g, |E1| %.4g |E2| %.4g",
                     n, beta, gamma, counting.measure, variation.measure)
    return WeakTypeExceptionalSets(first, kept, tuple(levels), star)


@dataclass(frozen=True)
class WeakTypeReport:
    grid_j: int
    grid_k: int
    p: float
    lam: float
    meas_f: float
    meas_level_set: float
    ratio: float
    seed: int
    regime: str
    first_measure: float
    exceptional_measure: float
    level_set_outside: float
    levels: int

    def row(self) -> Dict[str, object]:
        return {
            "gridJ": self.grid_j,
            "gridK": self.grid_k,
            "p": self.p,
            "lambda": self.lam,
            "measF": self.meas_f,
            "measLevelSet": self.meas_level_set,
            "ratio": self.ratio,
            "seed": self.seed,
        }

    @property
    def exceptional_ratio(self) -> float:
        """lambda^p (m(E) + m(E^*)) / |F|."""
        if self.meas_f == 0:
            return 0.0
        return self.lam ** self.p * (self.first_measure + self.exceptional_measure) / self.meas_f


def weak_type_experiment(
    cells: Iterable[int],
    p: float,
    lam: float,
    grid: Grid,
    bitiles: Optional[Iterable[Bitile]] = None,
    mode: str = "ascent",
    restarts: int = 4,
    seed: int = 0,
    wmax: Optional[WmaxField] = None,
    r: float = WEAK_TYPE_R,
    eps: float = WEAK_TYPE_EPS,
) -> WeakTypeReport:
    """lambda^p m{x : W^max 1_F(x) > lambda} / |F| for F a union of cells.

    The exceptional sets E and E^* of weak_type_exceptional_sets are
    reported next to the level set, together with the part of the level
    set outside E u E^*. For lambda > 1 the level set is that of
    lambda^-1 1_F at threshold 1, which homogeneity makes the same set.
    bitiles defaults to every bitile of the grid; pass wmax to reuse one
    W^max field across several (p, lambda).
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    cells = sorted(set(int(c) for c in cells))
    meas_f = grid.time_width * len(cells)
    if not cells:
        return WeakTypeReport(grid.J, grid.K, p, lam, 0.0, 0.0, 0.0, seed, _regime(lam), 0.0, 0.0, 0.0, 0)
    if bitiles is None:
        bitiles = all_bitiles(grid)
    bitiles = sorted(bitiles)
    if wmax is None:
        indicator = np.zeros(grid.size)
        indicator[cells] = 1.0
        wmax = carleson_Wmax(bitiles, StepFunction(grid, indicator), mode, restarts, seed)
    values = wmax.lower.values
    level = values > lam if lam <= 1 else values / lam > 1
    sets = weak_type_exceptional_sets(cells, p, lam, grid, bitiles, r, eps)
    meas_level = grid.time_width * int(level.sum())
    outside = grid.time_width * int((level & ~sets.excluded.mask).sum())
    ratio = lam ** p * meas_level / meas_f
    return WeakTypeReport(
        grid.J, grid.K, p, lam, meas_f, meas_level, ratio, seed, _regime(lam),
        sets.first.measure, sets.star.measure, outside, len(sets.levels),
    )


def _regime(lam: float) -> str:
    return "small" if lam <= 1 else "large"
