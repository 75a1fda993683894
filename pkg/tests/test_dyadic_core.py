"""Test cases for the dyadic_core module."""

import math
from fractions import Fraction

import numpy as np
import pytest

from walsh.dyadic_core import (
    ZERO,
    DyadicInterval,
    DyadicPoint,
    Domain,
    Grid,
    StepFunction,
    carryless_mul,
    character,
    conditional_expectation,
    martingale_averages,
    maximal_function,
    sign_e,
    walsh_fourier,
    walsh_function,
    xor_add,
)
from walsh.errors import GridMismatch, TileOutsideGrid


def point(value):
    return DyadicPoint.from_value(value)


def test_xor_add():
    """Test digitwise addition on exact dyadic values."""
    assert xor_add(point("3/8"), point("3/8")) == ZERO
    assert xor_add(point(0.5), point(0.25)).value == Fraction(3, 4)
    assert xor_add(point(1.5), point(1)).value == Fraction(1, 2)


def test_carryless_mul():
    """Test the carry-less product."""
    x = point("5/8")
    assert carryless_mul(point(1), x) == x
    assert carryless_mul(point(2), point(0.5)).value == 1
    assert carryless_mul(point(3), point(3)).value == 5
    assert carryless_mul(ZERO, x) == ZERO


def test_sign_and_character():
    """Test sign_e and the transform kernel."""
    assert sign_e(point(0)) == 1
    assert sign_e(point(0.5)) == -1
    assert sign_e(point(0.25)) == 1
    assert character(point("7/4"), ZERO) == 1
    assert character(point(0.5), point(1)) == -1


def test_from_value_rejects_non_dyadic():
    """Test that non-dyadic and negative values are rejected."""
    with pytest.raises(ValueError):
        point("1/3")
    with pytest.raises(ValueError):
        point(-1)


def test_walsh_function():
    """Test W_0, W_1 and W_2 on quarter points."""
    assert walsh_function(0, "3/8") == 1
    assert walsh_function(0, "5/4") == 0
    assert walsh_function(1, "1/4") == 1
    assert walsh_function(1, "3/4") == -1
    quarters = [walsh_function(2, Fraction(2 * q + 1, 8)) for q in range(4)]
    assert quarters == [1, -1, 1, -1]


def test_dyadic_interval_structure():
    """Test containment, parents and children."""
    interval = DyadicInterval.containing(point("3/4"), -1)
    assert interval == DyadicInterval(-1, 1)
    assert interval.parent == DyadicInterval(0, 0)
    assert interval.parent.contains(interval)
    left, right = DyadicInterval(1, 0).children
    assert left.disjoint(right)
    assert str(DyadicInterval(1, 1)) == "[2, 4)"


def test_grid_cells():
    """Test the cell maps of a grid."""
    grid = Grid(2, 1)
    assert grid.size == 8
    assert grid.time_cell(point("3/2")) == 3
    assert grid.time_point(3).value == Fraction(3, 2)
    assert grid.frequency_cell(point("3/4")) == 3
    with pytest.raises(TileOutsideGrid):
        grid.time_cell(point(4))
    with pytest.raises(TileOutsideGrid):
        grid.time_slice(DyadicInterval(-2, 0))


def test_character_signs_match_character():
    """Test that the vectorized signs agree with the scalar kernel."""
    grid = Grid(2, 1)
    for theta in range(grid.size):
        signs = grid.character_signs(theta)
        xi = grid.frequency_point(theta)
        expected = [character(grid.time_point(x), xi) for x in range(grid.size)]
        assert list(signs) == expected


def test_walsh_fourier_of_unit_indicator():
    """Test that the transform maps 1_[0,1) to itself."""
    grid = Grid(1, 1)
    f = StepFunction.indicator(grid, [DyadicInterval(0, 0)])
    spectrum = walsh_fourier(f)
    assert spectrum.domain is Domain.FREQUENCY
    np.testing.assert_allclose(spectrum.values, [1, 1, 0, 0], atol=1e-12)


def test_walsh_fourier_is_an_involution_and_isometry():
    """Test that transforming twice returns f and that norms are kept."""
    grid = Grid(3, 2)
    rng = np.random.default_rng(7)
    f = StepFunction(grid, rng.standard_normal((grid.size, 2)))
    spectrum = walsh_fourier(f)
    back = walsh_fourier(spectrum)
    assert back.domain is Domain.TIME
    np.testing.assert_allclose(back.values, f.values, atol=1e-12)
    assert spectrum.l2_norm() == pytest.approx(f.l2_norm(), rel=1e-12)


def test_conditional_expectation():
    """Test averaging at infinity, on constants and on two cells."""
    grid = Grid(1, 0)
    f = StepFunction(grid, [1.0, 0.0])
    assert not conditional_expectation(f, math.inf).values.any()
    np.testing.assert_allclose(conditional_expectation(f, 1).values, [0.5, 0.5])
    constant = StepFunction(Grid(2, 2), np.full(16, 3.0))
    for k in range(-2, 3):
        np.testing.assert_allclose(conditional_expectation(constant, k).values, 3.0)


def test_martingale_averages_shape():
    """Test keys and stack shape of the martingale sequence."""
    grid = Grid(2, 1)
    f = StepFunction(grid, np.arange(grid.size, dtype=float))
    keys, stack = martingale_averages(f)
    assert keys == [math.inf, 2, 1, 0, -1]
    assert stack.shape == (5, grid.size, 1)
    np.testing.assert_allclose(stack[-1, :, 0], f.values)


def test_maximal_function():
    """Test the dyadic maximal function on constants and an indicator."""
    grid = Grid(1, 0)
    f = StepFunction(grid, [1.0, 0.0])
    np.testing.assert_allclose(maximal_function(f, 1.0).values, [1.0, 0.5])
    constant = StepFunction(Grid(1, 1), np.full(4, 2.0))
    np.testing.assert_allclose(maximal_function(constant, 2.0).values, 2.0)
    with pytest.raises(ValueError):
        maximal_function(f, 0.5)


def test_step_function_shape_checked():
    """Test that values must match the grid size."""
    with pytest.raises(GridMismatch):
        StepFunction(Grid(1, 1), np.zeros(3))
    with pytest.raises(GridMismatch):
        StepFunction.zeros(Grid(1, 1)) + StepFunction.zeros(Grid(1, 2))


def test_carryless_mul_distributes_over_xor_add():
    """Test x (x) (y + z) = x (x) y + x (x) z on all digit sets inside {-2, ..., 1}."""
    positions = range(-2, 2)
    points = [
        DyadicPoint(frozenset(n for bit, n in enumerate(positions) if mask >> bit & 1))
        for mask in range(1 << len(positions))
    ]
    for x in points:
        assert carryless_mul(point(1), x) == x
        for y in points:
            assert carryless_mul(x, y) == carryless_mul(y, x)
            for z in points:
                assert carryless_mul(x, xor_add(y, z)) == xor_add(carryless_mul(x, y), carryless_mul(x, z))


def test_character_is_multiplicative():
    """Test e((x + y) (x) xi) = e(x (x) xi) e(y (x) xi) on every triple of Grid(2, 2)."""
    grid = Grid(2, 2)
    times = [grid.time_point(x) for x in range(grid.size)]
    for xi in grid.frequency_points():
        for a, x in enumerate(times):
            for b, y in enumerate(times):
                total = xor_add(x, y)
                assert grid.time_cell(total) == a ^ b
                assert character(total, xi) == character(x, xi) * character(y, xi)


def test_character_signs_are_multiplicative_on_small_grids():
    """Test multiplicativity exhaustively for every grid with J + K <= 6."""
    for bits in range(7):
        for J in range(bits + 1):
            grid = Grid(J, bits - J)
            cells = np.arange(grid.size)
            table = np.array([grid.character_signs(theta) for theta in range(grid.size)])
            if bits <= 4:
                expected = [[character(grid.time_point(x), grid.frequency_point(theta)) for x in range(grid.size)]
                            for theta in range(grid.size)]
                np.testing.assert_array_equal(table, expected)
            combined = table[:, cells[:, np.newaxis] ^ cells[np.newaxis, :]]
            np.testing.assert_array_equal(combined, table[:, :, np.newaxis] * table[:, np.newaxis, :])


def test_character_matches_walsh_functions():
    """Test character(x, l) = W_l(x) for x in [0, 1) on the grid and 0 <= l < 2^K."""
    grid = Grid(1, 4)
    for l in range(1 << grid.K):
        frequency = point(l)
        for cell in range(1 << grid.K):
            x = grid.time_point(cell)
            assert character(x, frequency) == walsh_function(l, x)


def test_conditional_expectation_is_a_martingale():
    """Test E(E(f|D_k)|D_k') = E(f|D_max(k,k')) and ||E(f|D_k)||_2 <= ||f||_2."""
    grid = Grid(2, 3)
    rng = np.random.default_rng(21)
    f = StepFunction(grid, rng.standard_normal((grid.size, 2)))
    scales = list(range(-grid.K - 1, grid.J + 2)) + [math.inf]
    for k in scales:
        inner = conditional_expectation(f, k)
        assert inner.l2_norm() <= f.l2_norm() * (1 + 1e-12)
        for k2 in scales:
            np.testing.assert_allclose(
                conditional_expectation(inner, k2).values,
                conditional_expectation(f, max(k, k2)).values,
                atol=1e-12,
            )


def test_maximal_function_increases_with_s():
    """Test M_s f <= M_s' f pointwise for s <= s'."""
    grid = Grid(3, 2)
    rng = np.random.default_rng(4)
    for f in (StepFunction(grid, rng.standard_normal(grid.size)),
              StepFunction(grid, rng.standard_normal((grid.size, 3))),
              StepFunction(grid, (rng.random(grid.size) < 0.2).astype(float))):
        fields = [maximal_function(f, s).values for s in (1.0, 1.5, 2.0, 3.0, 6.0)]
        for low, high in zip(fields, fields[1:]):
            assert np.all(low <= high * (1 + 1e-12) + 1e-15)


@pytest.mark.parametrize("J, K", [(14, 0), (7, 7), (0, 14)])
def test_walsh_fourier_on_largest_grids(J, K):
    """Test involution and isometry for 100 random functions on 2^14 cells."""
    grid = Grid(J, K)
    rng = np.random.default_rng(J)
    f = StepFunction(grid, rng.standard_normal((grid.size, 100)))
    spectrum = walsh_fourier(f)
    np.testing.assert_allclose(walsh_fourier(spectrum).values, f.values, rtol=0, atol=1e-10)
    norms = np.sqrt(f.cell_width * np.sum(f.values ** 2, axis=0))
    spectral = np.sqrt(spectrum.cell_width * np.sum(spectrum.values ** 2, axis=0))
    np.testing.assert_allclose(spectral, norms, rtol=1e-10)
