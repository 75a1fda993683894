"""Dyadic arithmetic, Walsh functions and the Walsh-Fourier transform.

Points of R+ are handled exactly as finite sets of binary digit positions.
Functions live on a finite grid: the time axis [0, 2^J) is cut into
N = 2^(J+K) cells of width 2^-K, and the frequency axis [0, 2^K) into N
cells of width 2^-J. Characters e(x (x) xi) are constant on cells of both
axes, so every transform on the grid is exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import FrozenSet, Iterable, List, Tuple, Union

import numpy as np

from walsh.errors import GridMismatch, TileOutsideGrid

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction, str]


def _dyadic_fraction(value: Union["DyadicPoint", Number]) -> Fraction:
    if isinstance(value, DyadicPoint):
        return value.value
    frac = Fraction(value)
    if frac < 0:
        raise ValueError(f"dyadic points are nonnegative, got {value}")
    den = frac.denominator
    if den & (den - 1):
        raise ValueError(f"{value} is not a dyadic rational")
    return frac


def _clmul(a: int, b: int) -> int:
    """Carry-less (GF(2) polynomial) product of two nonnegative integers."""
    result = 0
    while b:
        if b & 1:
            result ^= a
        a <<= 1
        b >>= 1
    return result


@dataclass(frozen=True)
class DyadicPoint:
    """A nonnegative dyadic rational as the set of positions n with a_n = 1."""

    digits: FrozenSet[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "digits", frozenset(int(n) for n in self.digits))

    @classmethod
    def from_value(cls, value: Number) -> "DyadicPoint":
        """Build a point from an int, float, Fraction or string like '3/4'.

        Terminating binary expansions are always used.
        """
        frac = _dyadic_fraction(value)
        shift = frac.denominator.bit_length() - 1
        mantissa = frac.numerator
        digits = {b - shift for b in range(mantissa.bit_length()) if mantissa >> b & 1}
        return cls(frozenset(digits))

    @classmethod
    def from_index(cls, index: int, shift: int) -> "DyadicPoint":
        """The point index * 2^-shift."""
        if index < 0:
            raise ValueError("index must be nonnegative")
        return cls(frozenset(b - shift for b in range(index.bit_length()) if index >> b & 1))

    @property
    def value(self) -> Fraction:
        return sum((Fraction(2) ** n for n in self.digits), Fraction(0))

    def digit(self, n: int) -> int:
        return 1 if n in self.digits else 0

    def scaled_index(self, shift: int) -> int:
        """floor(x * 2^shift)."""
        return sum(1 << (n + shift) for n in self.digits if n + shift >= 0)

    def _as_int(self, offset: int) -> int:
        return sum(1 << (n + offset) for n in self.digits)

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return str(self.value)


ZERO = DyadicPoint()
ONE = DyadicPoint(frozenset({0}))


def xor_add(x: DyadicPoint, y: DyadicPoint) -> DyadicPoint:
    """Digitwise addition mod 2."""
    return DyadicPoint(x.digits ^ y.digits)


def carryless_mul(x: DyadicPoint, y: DyadicPoint) -> DyadicPoint:
    """a_n(x (x) y) = sum_m a_m(x) a_{n-m}(y) mod 2."""
    if not x.digits or not y.digits:
        return ZERO
    ox = -min(x.digits)
    oy = -min(y.digits)
    product = _clmul(x._as_int(ox), y._as_int(oy))
    shift = ox + oy
    return DyadicPoint(
        frozenset(b - shift for b in range(product.bit_length()) if product >> b & 1)
    )


def sign_e(x: DyadicPoint) -> int:
    """+1 when a_{-1}(x) = 0, -1 otherwise."""
    return -1 if -1 in x.digits else 1


def character(x: DyadicPoint, xi: DyadicPoint) -> int:
    """The transform kernel e(x (x) xi)."""
    return sign_e(carryless_mul(x, xi))


def walsh_function(l: int, x: Union[DyadicPoint, Number]) -> float:
    """Evaluate W_l(x) through W_{2l} = W_l(2x) + W_l(2x-1), W_{2l+1} = W_l(2x) - W_l(2x-1)."""
    if l < 0:
        raise ValueError("Walsh functions are indexed by l >= 0")
    t = _dyadic_fraction(x)
    sign = 1
    while True:
        if not 0 <= t < 1:
            return 0.0
        if l == 0:
            return float(sign)
        bit = l & 1
        l >>= 1
        if t < Fraction(1, 2):
            t = 2 * t
        else:
            t = 2 * t - 1
            if bit:
                sign = -sign


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The interval [2^scale * index, 2^scale * (index + 1))."""

    scale: int
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("dyadic intervals live in R+, index must be >= 0")

    @classmethod
    def containing(cls, x: Union[DyadicPoint, Number], scale: int) -> "DyadicInterval":
        t = _dyadic_fraction(x)
        return cls(scale, math.floor(t / Fraction(2) ** scale))

    @property
    def length(self) -> Fraction:
        return Fraction(2) ** self.scale

    @property
    def left(self) -> Fraction:
        return self.length * self.index

    @property
    def right(self) -> Fraction:
        return self.length * (self.index + 1)

    @property
    def left_point(self) -> DyadicPoint:
        return DyadicPoint.from_value(self.left)

    @property
    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.scale + 1, self.index >> 1)

    @property
    def children(self) -> Tuple["DyadicInterval", "DyadicInterval"]:
        return (
            DyadicInterval(self.scale - 1, 2 * self.index),
            DyadicInterval(self.scale - 1, 2 * self.index + 1),
        )

    def contains(self, other: "DyadicInterval") -> bool:
        if other.scale > self.scale:
            return False
        return other.index >> (self.scale - other.scale) == self.index

    def contains_point(self, x: Union[DyadicPoint, Number]) -> bool:
        return self.left <= _dyadic_fraction(x) < self.right

    def disjoint(self, other: "DyadicInterval") -> bool:
        return not (self.contains(other) or other.contains(self))

    def __str__(self) -> str:
        return f"[{self.left}, {self.right})"


@lru_cache(maxsize=None)
def _bit_reversal(bits: int) -> np.ndarray:
    idx = np.arange(1 << bits)
    rev = np.zeros_like(idx)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=4096)
def _parity_signs(bits: int, mask: int) -> np.ndarray:
    idx = np.arange(1 << bits)
    parity = np.zeros_like(idx)
    for b in range(bits):
        if mask >> b & 1:
            parity ^= (idx >> b) & 1
    signs = 1.0 - 2.0 * parity
    signs.setflags(write=False)
    return signs


@dataclass(frozen=True)
class Grid:
    """Finite truncation of C^D(R+): time [0, 2^J) in cells of width 2^-K."""

    J: int
    K: int

    def __post_init__(self):
        if self.J < 0 or self.K < 0:
            raise ValueError("grid exponents must be nonnegative")

    @property
    def bits(self) -> int:
        return self.J + self.K

    @property
    def size(self) -> int:
        return 1 << self.bits

    @property
    def time_width(self) -> float:
        return 2.0 ** -self.K

    @property
    def frequency_width(self) -> float:
        return 2.0 ** -self.J

    def bit_reversal(self) -> np.ndarray:
        return _bit_reversal(self.bits)

    def time_cell(self, x: Union[DyadicPoint, Number]) -> int:
        t = _dyadic_fraction(x)
        if t >= 2 ** self.J:
            raise TileOutsideGrid(f"time point {t} outside [0, 2^{self.J})")
        return math.floor(t * 2 ** self.K)

    def time_point(self, cell: int) -> DyadicPoint:
        return DyadicPoint.from_index(cell, self.K)

    def frequency_cell(self, xi: Union[DyadicPoint, Number]) -> int:
        t = _dyadic_fraction(xi)
        if t >= 2 ** self.K:
            raise TileOutsideGrid(f"frequency {t} outside [0, 2^{self.K})")
        return math.floor(t * 2 ** self.J)

    def frequency_point(self, cell: int) -> DyadicPoint:
        return DyadicPoint.from_index(cell, self.J)

    def frequency_points(self) -> List[DyadicPoint]:
        return [self.frequency_point(d) for d in range(self.size)]

    def time_intervals(self, min_scale: int = None) -> List[DyadicInterval]:
        """All dyadic time intervals of the grid, coarse scales first."""
        low = -self.K if min_scale is None else max(min_scale, -self.K)
        return [
            DyadicInterval(scale, m)
            for scale in range(self.J, low - 1, -1)
            for m in range(1 << (self.J - scale))
        ]

    def time_slice(self, interval: DyadicInterval) -> slice:
        if interval.scale < -self.K or interval.right > 2 ** self.J:
            raise TileOutsideGrid(f"time interval {interval} not resolved by {self}")
        width = 1 << (interval.scale + self.K)
        return slice(interval.index * width, (interval.index + 1) * width)

    def frequency_slice(self, interval: DyadicInterval) -> slice:
        if interval.scale < -self.J or interval.right > 2 ** self.K:
            raise TileOutsideGrid(f"frequency interval {interval} not resolved by {self}")
        width = 1 << (interval.scale + self.J)
        return slice(interval.index * width, (interval.index + 1) * width)

    def character_signs(self, freq_cell: int) -> np.ndarray:
        """x -> e(x (x) xi) over the time cells, xi the left end of a frequency cell.

        Bit j of the time cell index pairs with bit (J+K-1-j) of the
        frequency cell index.
        """
        mask = int(self.bit_reversal()[freq_cell])
        return _parity_signs(self.bits, mask)


class Domain(str, Enum):
    TIME = "time"
    FREQUENCY = "frequency"

    @property
    def dual(self) -> "Domain":
        return Domain.FREQUENCY if self is Domain.TIME else Domain.TIME


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise constant function on a grid, scalar or H = R^d valued."""

    grid: Grid
    values: np.ndarray
    domain: Domain = Domain.TIME

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim not in (1, 2) or values.shape[0] != self.grid.size:
            raise GridMismatch(
                f"expected {self.grid.size} cells for {self.grid}, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "domain", Domain(self.domain))

    @classmethod
    def zeros(cls, grid: Grid, dim: int = None, domain: Domain = Domain.TIME) -> "StepFunction":
        shape = (grid.size,) if dim is None else (grid.size, dim)
        return cls(grid, np.zeros(shape), domain)

    @classmethod
    def indicator(cls, grid: Grid, intervals: Iterable[DyadicInterval]) -> "StepFunction":
        values = np.zeros(grid.size)
        for interval in intervals:
            values[grid.time_slice(interval)] = 1.0
        return cls(grid, values)

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 2

    @property
    def cell_width(self) -> float:
        if self.domain is Domain.TIME:
            return self.grid.time_width
        return self.grid.frequency_width

    def pointwise_norm(self) -> np.ndarray:
        if self.is_vector:
            return np.linalg.norm(self.values, axis=1)
        return np.abs(self.values)

    def lp_norm(self, p: float = 2.0) -> float:
        magnitude = self.pointwise_norm()
        if math.isinf(p):
            return float(magnitude.max(initial=0.0))
        return float((self.cell_width * np.sum(magnitude ** p)) ** (1.0 / p))

    def l2_norm(self) -> float:
        return self.lp_norm(2.0)

    def inner(self, other: "StepFunction") -> float:
        self._check_compatible(other)
        return float(self.cell_width * np.sum(self.values * other.values))

    def with_values(self, values: np.ndarray) -> "StepFunction":
        return StepFunction(self.grid, values, self.domain)

    def value_at(self, x: Union[DyadicPoint, Number]):
        if self.domain is Domain.TIME:
            return self.values[self.grid.time_cell(x)]
        return self.values[self.grid.frequency_cell(x)]

    def _check_compatible(self, other: "StepFunction") -> None:
        if other.grid != self.grid or other.domain is not self.domain:
            raise GridMismatch(f"cannot combine {self.grid}/{self.domain} with {other.grid}/{other.domain}")

    def __add__(self, other: "StepFunction") -> "StepFunction":
        self._check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        self._check_compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: float) -> "StepFunction":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform in natural order along axis 0."""
    out = np.array(values, dtype=float)
    n = out.shape[0]
    if n & (n - 1):
        raise GridMismatch(f"transform length {n} is not a power of two")
    tail = out.shape[1:]
    h = 1
    while h < n:
        view = out.reshape((n // (2 * h), 2, h) + tail)
        top = view[:, 0].copy()
        view[:, 0] += view[:, 1]
        view[:, 1] = top - view[:, 1]
        h *= 2
    return out


def walsh_fourier(f: StepFunction) -> StepFunction:
    """f^(xi) = int e(x (x) xi) f(x) dx on the grid; its own inverse.

    A time function maps to the frequency grid and back.
    """
    grid = f.grid
    if f.values.shape[0] != grid.size:
        raise GridMismatch(f"function has {f.values.shape[0]} cells, grid needs {grid.size}")
    transformed = fwht(f.values[grid.bit_reversal()]) * f.cell_width
    return StepFunction(grid, transformed, f.domain.dual)


def conditional_expectation(f: StepFunction, k: Union[int, float]) -> StepFunction:
    """E(f | D_k): averages over dyadic intervals of length 2^k.

    k <= -K returns f, k >= J averages over [0, 2^J), k = inf gives 0.
    """
    if f.domain is not Domain.TIME:
        raise GridMismatch("conditional expectations act on time functions")
    if k == math.inf:
        return f.with_values(np.zeros_like(f.values))
    grid = f.grid
    k = int(k)
    if k <= -grid.K:
        return f.with_values(f.values)
    block = 1 << (min(k, grid.J) + grid.K)
    tail = f.values.shape[1:]
    averages = f.values.reshape((grid.size // block, block) + tail).mean(axis=1)
    return f.with_values(np.repeat(averages, block, axis=0))


def martingale_averages(f: StepFunction, include_infinity: bool = True) -> Tuple[List[float], np.ndarray]:
    """The sequence k -> E(f | D_k) for k = inf, J, J-1, ..., -K.

    Returns the keys and an array of shape (levels, N, d).
    """
    grid = f.grid
    keys: List[float] = [math.inf] if include_infinity else []
    keys += list(range(grid.J, -grid.K - 1, -1))
    stack = np.stack([conditional_expectation(f, k).values for k in keys])
    if stack.ndim == 2:
        stack = stack[:, :, np.newaxis]
    return keys, stack


def maximal_function(f: StepFunction, s: float = 1.0) -> StepFunction:
    """Dyadic maximal function M_s f(x) = sup_{x in I} (avg_I |f|^s)^(1/s)."""
    if s < 1:
        raise ValueError("maximal function needs s >= 1")
    grid = f.grid
    power = f.with_values(f.pointwise_norm() ** s)
    best = np.zeros(grid.size)
    for k in range(-grid.K, grid.J + 1):
        best = np.maximum(best, conditional_expectation(power, k).values)
    return StepFunction(grid, best ** (1.0 / s))
