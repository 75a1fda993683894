"""Weighted band multipliers Delta_k, chain decompositions and M2* estimation.

M2* operators are handled as explicit N x N matrices, which keeps them to
small grids. With U = N^(-1/2) H P (Hadamard matrix H, bit reversal P),
the multiplier g -> (g^ m)v is U diag(m) U and U is symmetric orthogonal.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from walsh.dyadic_core import DyadicInterval, DyadicPoint, Grid, StepFunction, fwht, walsh_fourier
from walsh.errors import InstanceTooLarge, MissingWeight
from walsh.seeding import derive_seed
from walsh.variation import KSequence, variation_norm

logger = logging.getLogger(__name__)

ORACLE_ASSIGNMENT_LIMIT = 4 ** 8
_ORACLE_CHUNK = 4096


@dataclass(frozen=True)
class FrequencySet:
    """A finite set Xi of frequencies inside [0, 2^K), kept in increasing order."""

    grid: Grid
    points: Tuple[DyadicPoint, ...]

    def __post_init__(self):
        unique = {p.value: p for p in self.points}
        for p in unique.values():
            self.grid.frequency_cell(p)
        object.__setattr__(self, "points", tuple(unique[v] for v in sorted(unique)))

    @classmethod
    def from_values(cls, grid: Grid, values: Iterable) -> "FrequencySet":
        return cls(grid, tuple(DyadicPoint.from_value(v) for v in values))

    @classmethod
    def random(cls, grid: Grid, size: int, rng: np.random.Generator) -> "FrequencySet":
        """size distinct left endpoints of frequency cells."""
        cells = rng.choice(grid.size, size=size, replace=False)
        return cls(grid, tuple(grid.frequency_point(int(c)) for c in cells))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def _check_scale(grid: Grid, k: int) -> None:
    if not -grid.K <= k <= grid.J:
        raise ValueError(f"intervals of length 2^{-k} are not resolved by {grid}")


def omega_k(xi_set: FrequencySet, k: int) -> List[DyadicInterval]:
    """The dyadic intervals of length 2^-k that meet Xi."""
    _check_scale(xi_set.grid, k)
    return sorted({DyadicInterval.containing(xi, -k) for xi in xi_set})


@dataclass(frozen=True)
class WeightFamily:
    """Numbers eps_omega keyed by (k, omega), omega in Omega_k, k_min <= k <= k_max."""

    weights: Mapping[Tuple[int, DyadicInterval], float]
    k_min: int
    k_max: int

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValueError(f"empty k range [{self.k_min}, {self.k_max}]")
        for k, omega in self.weights:
            if omega.scale != -k:
                raise ValueError(f"{omega} keyed at k={k} does not have length 2^{-k}")

    @classmethod
    def from_function(
        cls,
        xi_set: FrequencySet,
        k_min: int,
        k_max: int,
        weight: Callable[[int, DyadicInterval], float],
    ) -> "WeightFamily":
        weights = {
            (k, omega): float(weight(k, omega))
            for k in range(k_min, k_max + 1)
            for omega in omega_k(xi_set, k)
        }
        return cls(weights, k_min, k_max)

    @classmethod
    def constant(cls, xi_set: FrequencySet, k_min: int, k_max: int, value: float = 1.0) -> "WeightFamily":
        return cls.from_function(xi_set, k_min, k_max, lambda k, omega: value)

    @classmethod
    def random(
        cls, xi_set: FrequencySet, k_min: int, k_max: int, rng: np.random.Generator
    ) -> "WeightFamily":
        """Weights drawn uniformly from [-1, 1]."""
        return cls.from_function(xi_set, k_min, k_max, lambda k, omega: rng.uniform(-1.0, 1.0))

    @property
    def k_range(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def weight(self, k: int, omega: DyadicInterval) -> float:
        try:
            return self.weights[(k, omega)]
        except KeyError:
            raise MissingWeight(f"no weight for {omega} at k={k}") from None

    def validate(self, xi_set: FrequencySet) -> "WeightFamily":
        for k, omega in self.weights:
            if not any(omega.contains_point(xi) for xi in xi_set):
                raise ValueError(f"{omega} at k={k} contains no point of the frequency set")
        return self


def band_multiplier(weights: WeightFamily, xi_set: FrequencySet, k: int) -> np.ndarray:
    """sum_{omega in Omega_k} eps_omega 1_omega over the frequency cells."""
    grid = xi_set.grid
    multiplier = np.zeros(grid.size)
    for omega in omega_k(xi_set, k):
        multiplier[grid.frequency_slice(omega)] = weights.weight(k, omega)
    return multiplier


def _apply_multiplier(f: StepFunction, multiplier: np.ndarray) -> StepFunction:
    spectrum = walsh_fourier(f)
    shaped = multiplier.reshape((-1,) + (1,) * (spectrum.values.ndim - 1))
    return walsh_fourier(spectrum.with_values(spectrum.values * shaped))


def delta_k(f: StepFunction, weights: WeightFamily, xi_set: FrequencySet, k: int) -> StepFunction:
    """Delta_k f = sum_{omega in Omega_k} eps_omega (f^ 1_omega)v."""
    if k not in weights.k_range:
        raise ValueError(f"k={k} outside the weight range {weights.k_min}..{weights.k_max}")
    return _apply_multiplier(f, band_multiplier(weights, xi_set, k))


def band_projection(f: StepFunction, intervals: Iterable[DyadicInterval]) -> StepFunction:
    """(f^ 1_U)v with U the union of the given frequency intervals."""
    grid = f.grid
    multiplier = np.zeros(grid.size)
    for omega in intervals:
        multiplier[grid.frequency_slice(omega)] = 1.0
    return _apply_multiplier(f, multiplier)


def delta_family(
    f: StepFunction, weights: WeightFamily, xi_set: FrequencySet
) -> Tuple[List[int], np.ndarray]:
    """Delta_k f for every k in the weight range, stacked along axis 0."""
    keys = list(weights.k_range)
    return keys, np.stack([delta_k(f, weights, xi_set, k).values for k in keys])


def _sup_magnitude(stack: np.ndarray) -> np.ndarray:
    magnitude = np.abs(stack) if stack.ndim == 2 else np.linalg.norm(stack, axis=2)
    return magnitude.max(axis=0)


def maximal_delta(f: StepFunction, weights: WeightFamily, xi_set: FrequencySet) -> StepFunction:
    """x -> sup_k |Delta_k f(x)|_H."""
    _, stack = delta_family(f, weights, xi_set)
    return StepFunction(f.grid, _sup_magnitude(stack))


def weight_variation(weights: WeightFamily, xi_set: FrequencySet, r: float) -> float:
    """sigma = sup over xi of ||eps_{omega_{xi,k}}||_{V^r(k)} along the nested chain."""
    if not r > 2:
        raise ValueError(f"r must exceed 2, got {r}")
    keys = list(reversed(weights.k_range))
    sigma = 0.0
    for xi in xi_set:
        chain = [weights.weight(k, DyadicInterval.containing(xi, -k)) for k in keys]
        sigma = max(sigma, variation_norm(KSequence.from_values(chain, keys), r))
    return sigma


@dataclass(frozen=True)
class IntervalWeightFamily:
    """Numbers eps_{k, omega} on N disjoint dyadic frequency intervals, the same Omega at every k."""

    grid: Grid
    intervals: Tuple[DyadicInterval, ...]
    weights: Mapping[Tuple[int, DyadicInterval], float]
    k_min: int
    k_max: int

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValueError(f"empty k range [{self.k_min}, {self.k_max}]")
        intervals = tuple(sorted(set(self.intervals), key=lambda omega: omega.left))
        if not intervals:
            raise ValueError("need at least one interval")
        for omega in intervals:
            self.grid.frequency_slice(omega)
        for first, second in zip(intervals, intervals[1:]):
            if not first.disjoint(second):
                raise ValueError(f"intervals {first} and {second} overlap")
        for k, omega in self.weights:
            if omega not in intervals:
                raise ValueError(f"weight at k={k} keyed on {omega}, which is not one of the intervals")
        object.__setattr__(self, "intervals", intervals)

    @classmethod
    def from_function(
        cls,
        grid: Grid,
        intervals: Iterable[DyadicInterval],
        k_min: int,
        k_max: int,
        weight: Callable[[int, DyadicInterval], float],
    ) -> "IntervalWeightFamily":
        intervals = tuple(intervals)
        weights = {(k, omega): float(weight(k, omega)) for k in range(k_min, k_max + 1) for omega in intervals}
        return cls(grid, intervals, weights, k_min, k_max)

    @classmethod
    def random(
        cls,
        grid: Grid,
        intervals: Iterable[DyadicInterval],
        k_min: int,
        k_max: int,
        rng: np.random.Generator,
    ) -> "IntervalWeightFamily":
        """Weights drawn uniformly from [-1, 1]."""
        return cls.from_function(grid, intervals, k_min, k_max, lambda k, omega: rng.uniform(-1.0, 1.0))

    @property
    def k_range(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def weight(self, k: int, omega: DyadicInterval) -> float:
        try:
            return self.weights[(k, omega)]
        except KeyError:
            raise MissingWeight(f"no weight for {omega} at k={k}") from None

    def multiplier(self, k: int) -> np.ndarray:
        """sum_{omega in Omega} eps_{k, omega} 1_omega over the frequency cells."""
        multiplier = np.zeros(self.grid.size)
        for omega in self.intervals:
            multiplier[self.grid.frequency_slice(omega)] = self.weight(k, omega)
        return multiplier


def random_disjoint_intervals(grid: Grid, count: int, rng: np.random.Generator) -> List[DyadicInterval]:
    """count pairwise disjoint dyadic frequency intervals of random lengths inside [0, 2^K).

    The frequency axis is cut into count blocks of equal dyadic length and
    each block contributes one dyadic subinterval.
    """
    if not 1 <= count <= grid.size or count & (count - 1):
        raise ValueError(f"count must be a power of two between 1 and {grid.size}, got {count}")
    block = grid.K - int(math.log2(count))
    intervals = []
    for b in range(count):
        scale = int(rng.integers(-grid.J, block + 1))
        offset = int(rng.integers(0, 1 << (block - scale)))
        intervals.append(DyadicInterval(scale, (b << (block - scale)) + offset))
    return intervals


def interval_delta_family(f: StepFunction, weights: IntervalWeightFamily) -> Tuple[List[int], np.ndarray]:
    """Delta_k f = sum_{omega in Omega} eps_{k, omega} (f^ 1_omega)v for every k, stacked along axis 0."""
    keys = list(weights.k_range)
    return keys, np.stack([_apply_multiplier(f, weights.multiplier(k)).values for k in keys])


def maximal_interval_delta(f: StepFunction, weights: IntervalWeightFamily) -> StepFunction:
    """x -> sup_k |Delta_k f(x)|_H over a fixed Omega."""
    _, stack = interval_delta_family(f, weights)
    return StepFunction(f.grid, _sup_magnitude(stack))


def interval_weight_variation(weights: IntervalWeightFamily, r: float) -> float:
    """sup over omega in Omega of ||eps_{k, omega}||_{V^r(k)}."""
    if not r > 2:
        raise ValueError(f"r must exceed 2, got {r}")
    keys = list(reversed(weights.k_range))
    return max(
        variation_norm(KSequence.from_values([weights.weight(k, omega) for k in keys], keys), r)
        for omega in weights.intervals
    )


def greedy_cover(points: np.ndarray, lam: float, start: int = 0) -> List[int]:
    """Farthest-first centers until every point is within lam of a center."""
    if not lam > 0:
        raise ValueError(f"radius must be positive, got {lam}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise ValueError("cannot cover an empty set")
    centers = [start]
    distance = np.linalg.norm(points - points[start], axis=1)
    while distance.max() > lam:
        nxt = int(np.argmax(distance))
        centers.append(nxt)
        distance = np.minimum(distance, np.linalg.norm(points - points[nxt], axis=1))
    return centers


def covering_number(points: np.ndarray, lam: float, start: int = 0) -> int:
    """Size of the greedy lam-cover; nonincreasing in lam."""
    return len(greedy_cover(points, lam, start))


@dataclass
class ChainDecomposition:
    """Per-level difference sets C_n and the telescoping representation of each point.

    representations[i] lists the nonzero (n, c_n) with c_n in C_n summing to
    points[i].
    """

    points: np.ndarray
    levels: Dict[int, np.ndarray] = field(default_factory=dict)
    centers: Dict[int, List[int]] = field(default_factory=dict)
    representations: List[List[Tuple[int, np.ndarray]]] = field(default_factory=list)

    def reconstruct(self, i: int) -> np.ndarray:
        total = np.zeros(self.points.shape[1])
        for _, term in self.representations[i]:
            total = total + term
        return total


def chain_decompose(points: np.ndarray) -> ChainDecomposition:
    """Multiscale decomposition of a finite set C containing 0.

    B_n is the greedy 2^-n cover of the distinct points of C started at the
    point 0, each center is linked to its nearest center in B_(n-1), and
    C_n = {c - parent(c)} u {0}. Levels run until every point of C is a
    center.

    The bound |C_n| <= |B_n| + 1 refers to that cover, i.e. to
    covering_number(unique_points, 2^-n, start=index_of_0), not to the
    default start=0 of covering_number.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    zeros = np.flatnonzero(~points.any(axis=1))
    if zeros.size == 0:
        raise ValueError("the point set must contain 0")
    unique, inverse = np.unique(points, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    origin = int(inverse[zeros[0]])
    decomposition = ChainDecomposition(points)
    dim = points.shape[1]
    if unique.shape[0] == 1:
        decomposition.representations = [[] for _ in range(points.shape[0])]
        return decomposition

    diameter = max(
        float(np.linalg.norm(unique - unique[i], axis=1).max()) for i in range(unique.shape[0])
    )
    n = math.ceil(-math.log2(diameter))
    previous = [origin]
    decomposition.centers[n - 1] = previous
    parents: Dict[int, Dict[int, int]] = {}
    while True:
        current = greedy_cover(unique, 2.0 ** -n, origin)
        links = {}
        for c in current:
            gaps = np.linalg.norm(unique[previous] - unique[c], axis=1)
            links[c] = previous[int(np.argmin(gaps))]
        parents[n] = links
        decomposition.centers[n] = current
        differences = [unique[c] - unique[p] for c, p in links.items()]
        decomposition.levels[n] = np.unique(np.vstack(differences + [np.zeros(dim)]), axis=0)
        logger.debug("chain level %d: %d centers", n, len(current))
        if len(current) == unique.shape[0]:
            break
        previous = current
        n += 1

    finest = n
    unique_reps: List[List[Tuple[int, np.ndarray]]] = []
    for i in range(unique.shape[0]):
        terms = []
        node = i
        for level in range(finest, min(parents) - 1, -1):
            parent = parents[level][node]
            step = unique[node] - unique[parent]
            if step.any():
                terms.append((level, step))
            node = parent
        unique_reps.append(list(reversed(terms)))
    decomposition.representations = [unique_reps[j] for j in inverse]
    return decomposition


@lru_cache(maxsize=16)
def _unitary(grid: Grid) -> np.ndarray:
    matrix = fwht(np.eye(grid.size)[grid.bit_reversal()]) / math.sqrt(grid.size)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class MultiplierFamily:
    """Multipliers m_k on the frequency grid, members ordered by increasing k."""

    grid: Grid
    members: np.ndarray
    keys: Tuple[int, ...] = ()

    def __post_init__(self):
        members = np.atleast_2d(np.array(self.members, dtype=float))
        if members.shape[1] != self.grid.size:
            raise ValueError(f"multipliers have {members.shape[1]} cells, {self.grid} needs {self.grid.size}")
        keys = tuple(self.keys) or tuple(range(members.shape[0]))
        if len(keys) != members.shape[0]:
            raise ValueError(f"{len(keys)} keys for {members.shape[0]} members")
        members.setflags(write=False)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "keys", keys)

    def __len__(self) -> int:
        return self.members.shape[0]

    def sup_norms(self) -> np.ndarray:
        return np.abs(self.members).max(axis=1)

    def operators(self) -> np.ndarray:
        """T_k = U diag(m_k) U, shape (members, N, N)."""
        unitary = _unitary(self.grid)
        return np.einsum("ij,kj,jl->kil", unitary, self.members, unitary)

    def distinct_nonzero(self) -> "MultiplierFamily":
        """Drop identically zero and repeated members; the M2* norm is unchanged."""
        kept: List[int] = []
        for i, member in enumerate(self.members):
            if not member.any():
                continue
            if any(np.array_equal(member, self.members[j]) for j in kept):
                continue
            kept.append(i)
        return MultiplierFamily(
            self.grid, self.members[kept].reshape(len(kept), self.grid.size), tuple(self.keys[i] for i in kept)
        )


def _objective(operators: np.ndarray, g: np.ndarray) -> float:
    norm = np.linalg.norm(g)
    if norm == 0:
        return 0.0
    images = operators @ g
    return float(np.sqrt(np.sum(np.abs(images).max(axis=0) ** 2)) / norm)


def m2star_objective(family: MultiplierFamily, g: StepFunction) -> float:
    """||sup_k |(g^ m_k)v| ||_2 / ||g||_2."""
    return _objective(family.operators(), np.asarray(g.values, dtype=float))


def _linearized_form(operators: np.ndarray, g: np.ndarray) -> np.ndarray:
    """sum_x row_x^T row_x with row_x the x-th row of T_{k(x)}, k(x) the argmax at g."""
    images = np.abs(operators @ g)
    choice = np.argmax(images, axis=0)
    rows = operators[choice, np.arange(operators.shape[1])]
    return rows.T @ rows


def _ascend(operators: np.ndarray, g: np.ndarray, max_iter: int) -> Tuple[float, np.ndarray]:
    g = g / np.linalg.norm(g)
    value = _objective(operators, g)
    for _ in range(max_iter):
        _, vectors = np.linalg.eigh(_linearized_form(operators, g))
        candidate = vectors[:, -1]
        candidate_value = _objective(operators, candidate)
        if candidate_value <= value * (1 + 1e-13):
            break
        g, value = candidate, candidate_value
    return value, g


def m2star_lower(
    family: MultiplierFamily, restarts: int = 8, seed: int = 0, max_iter: int = 100
) -> Tuple[float, StepFunction]:
    """Certified lower bound on the M2* norm with a witness g.

    Each restart alternates between freezing k(x) = argmax_k |T_k g(x)|
    (ties to the smaller k) and jumping to the top eigenvector of the
    frozen quadratic form; the objective never decreases. Restart 0 starts
    from the spectral cell where some |m_k| peaks, the rest from Gaussian
    vectors seeded by SeedSequence(seed).spawn.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    grid = family.grid
    size = grid.size
    unitary = _unitary(grid)
    operators = family.operators()
    peak = np.unravel_index(np.argmax(np.abs(family.members)), family.members.shape)
    best_value, best_g = _objective(operators, unitary[:, peak[1]]), unitary[:, peak[1]]
    if best_value > 0:
        best_value, best_g = _ascend(operators, best_g, max_iter)
        for child in np.random.SeedSequence(seed).spawn(restarts - 1):
            rng = np.random.default_rng(child)
            value, g = _ascend(operators, rng.standard_normal(size), max_iter)
            logger.debug("m2star restart value %.12g", value)
            if value > best_value:
                best_value, best_g = value, g
    witness = StepFunction(grid, best_g / math.sqrt(grid.time_width))
    return m2star_objective(family, witness), witness


def m2star_oracle(family: MultiplierFamily) -> float:
    """Exact M2* norm by enumerating every assignment cell -> member.

    F(g)^2 = max over assignments of the top eigenvalue of the assigned
    quadratic form. Raises InstanceTooLarge beyond 4^8 assignments.
    """
    reduced = family.distinct_nonzero()
    count = len(reduced)
    if count == 0:
        return 0.0
    if count == 1:
        return float(reduced.sup_norms()[0])
    size = family.grid.size
    if count ** size > ORACLE_ASSIGNMENT_LIMIT:
        raise InstanceTooLarge(
            f"{count} distinct members on {size} cells need {count}^{size} assignments"
        )
    operators = reduced.operators()
    cells = np.arange(size)
    powers = count ** cells
    best = 0.0
    total = count ** size
    for start in range(0, total, _ORACLE_CHUNK):
        codes = np.arange(start, min(start + _ORACLE_CHUNK, total))
        assignment = (codes[:, np.newaxis] // powers) % count
        rows = operators[assignment, cells]
        forms = np.einsum("axi,axj->aij", rows, rows)
        best = max(best, float(np.linalg.eigvalsh(forms)[:, -1].max()))
    return math.sqrt(max(best, 0.0))


def m2star_upper(family: MultiplierFamily) -> float:
    """(sum_k ||m_k||_inf^2)^(1/2)."""
    return float(np.sqrt(np.sum(family.sup_norms() ** 2)))


@dataclass(frozen=True)
class BourgainRow:
    N: int
    r: float
    sigma: float
    lhs: float
    rhs: float
    ratio: float
    seed: int


@dataclass(frozen=True)
class BourgainReport:
    rows: Tuple[BourgainRow, ...]

    @property
    def max_ratio(self) -> float:
        return max((row.ratio for row in self.rows), default=0.0)


def bourgain_experiment(
    xi_set: FrequencySet, weights: WeightFamily, r: float, trials: int, seed: int
) -> BourgainReport:
    """Ratios ||sup_k |Delta_k f| ||_2 / (sigma N^(r/4-1/2) ||f||_2) over Gaussian f."""
    grid = xi_set.grid
    n = len(xi_set)
    sigma = weight_variation(weights, xi_set, r)
    scale = n ** (r / 4 - 0.5)
    rows = []
    for trial in range(trials):
        s = derive_seed(seed, trial)
        f = StepFunction(grid, np.random.default_rng(s).standard_normal(grid.size))
        lhs = maximal_delta(f, weights, xi_set).l2_norm()
        rhs = sigma * scale * f.l2_norm()
        rows.append(BourgainRow(n, r, sigma, lhs, rhs, lhs / rhs if rhs > 0 else 0.0, s))
    return BourgainReport(tuple(rows))


def interval_bourgain_experiment(
    weights: IntervalWeightFamily, r: float, trials: int, seed: int
) -> BourgainReport:
    """Ratios ||sup_k |Delta_k f| ||_2 / (N^(r/4-1/2) sup_omega ||eps_{k,omega}||_{V^r(k)} ||f||_2), Omega fixed."""
    grid = weights.grid
    n = len(weights.intervals)
    sigma = interval_weight_variation(weights, r)
    scale = n ** (r / 4 - 0.5)
    rows = []
    for trial in range(trials):
        s = derive_seed(seed, trial)
        f = StepFunction(grid, np.random.default_rng(s).standard_normal(grid.size))
        lhs = maximal_interval_delta(f, weights).l2_norm()
        rhs = sigma * scale * f.l2_norm()
        rows.append(BourgainRow(n, r, sigma, lhs, rhs, lhs / rhs if rhs > 0 else 0.0, s))
    return BourgainReport(tuple(rows))


def growth_exponent(sizes: Sequence[float], values: Sequence[float]) -> float:
    """Slope of log(values) against log(sizes)."""
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if sizes.size < 2:
        raise ValueError("need at least two sizes to fit an exponent")
    if np.any(values <= 0):
        raise ValueError("values must be positive")
    slope, _ = np.polyfit(np.log(sizes), np.log(values), 1)
    return float(slope)


@dataclass(frozen=True)
class RademacherMenshovReport:
    breakpoints: Tuple[int, ...]
    pieces: np.ndarray
    orthogonality_error: float
    restriction_error: float
    split_ratio: float

    @property
    def holds(self) -> bool:
        return self.orthogonality_error < 1e-9 and self.restriction_error < 1e-9 and self.split_ratio <= 1 + 1e-9


def rademacher_menshov_check(
    f: StepFunction, weights: WeightFamily, xi_set: FrequencySet
) -> RademacherMenshovReport:
    """Orthogonal band pieces and the dyadic two-term splitting behind the N^(r/4-1/2) bound.

    The k range is cut where |Omega_k| changes. Piece s is the band between
    Omega at consecutive breakpoints, the last piece is the band of the
    finest Omega. Checks that the pieces are orthogonal, that Delta_k only
    sees the pieces from its own segment on, and that every dyadic block of
    segments satisfies ||A u B||^2 <= ||B||^2 + (||A_low|| + ||A_high||)^2.
    """
    if f.is_vector:
        raise ValueError("the splitting check works on scalar functions")
    grid = f.grid
    keys = list(weights.k_range)
    counts = [len(omega_k(xi_set, k)) for k in keys]
    breakpoints = [keys[0]] + [k for k, c, prev in zip(keys[1:], counts[1:], counts) if c != prev]
    bands = [band_projection(f, omega_k(xi_set, k)).values for k in breakpoints]
    pieces = np.array([bands[s] - bands[s + 1] for s in range(len(bands) - 1)] + [bands[-1]])

    scale = grid.time_width
    gram = scale * pieces @ pieces.T
    off_diagonal = gram - np.diag(np.diag(gram))
    norm2 = max(f.l2_norm() ** 2, 1e-300)
    orthogonality_error = float(np.abs(off_diagonal).max(initial=0.0) / norm2)

    ends = breakpoints[1:] + [keys[-1] + 1]
    segments = [[keys.index(k) for k in range(lo, hi)] for lo, hi in zip(breakpoints, ends)]
    _, stack = delta_family(f, weights, xi_set)
    restriction_error = 0.0
    for s, segment in enumerate(segments):
        tail = StepFunction(grid, pieces[s:].sum(axis=0))
        for i in segment:
            restricted = delta_k(tail, weights, xi_set, keys[i]).values
            restriction_error = max(restriction_error, float(np.abs(restricted - stack[i]).max()))

    def block_norm(first: int, last: int, low: int, high: int) -> float:
        """|| sup_{first<=s<=last} O_s*(sum_{max(s,low)<=s'<=high} f_s') ||_2, one family per s."""
        best = np.zeros(grid.size)
        for s in range(first, last + 1):
            if s >= len(segments):
                break
            lo = max(s, low)
            if lo > high:
                continue
            h = StepFunction(grid, pieces[lo:high + 1].sum(axis=0))
            images = np.stack([delta_k(h, weights, xi_set, keys[i]).values for i in segments[s]])
            best = np.maximum(best, np.abs(images).max(axis=0))
        return math.sqrt(scale * float(np.sum(best ** 2)))

    split_ratio = 0.0
    width = 1
    while width < len(segments):
        width *= 2
    size = 2
    while size <= width:
        for first in range(0, width, size):
            last = first + size - 1
            middle = first + size // 2 - 1
            whole = block_norm(first, last, 0, last) ** 2
            upper = block_norm(middle + 1, last, 0, last) ** 2
            own = block_norm(first, middle, 0, middle)
            cross = block_norm(first, middle, middle + 1, last)
            bound = upper + (own + cross) ** 2
            if bound > 0:
                split_ratio = max(split_ratio, whole / bound)
            elif whole > 0:
                split_ratio = math.inf
        size *= 2
    return RademacherMenshovReport(
        tuple(breakpoints), pieces, orthogonality_error, restriction_error / math.sqrt(norm2), split_ratio
    )
