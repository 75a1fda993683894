"""Test cases for the maximal_multiplier module."""

import numpy as np
import pytest

from walsh.dyadic_core import DyadicInterval, Grid, StepFunction, character, conditional_expectation, walsh_fourier
from walsh.errors import InstanceTooLarge, MissingWeight, TileOutsideGrid
from walsh.maximal_multiplier import (
    FrequencySet,
    IntervalWeightFamily,
    MultiplierFamily,
    WeightFamily,
    band_projection,
    bourgain_experiment,
    chain_decompose,
    covering_number,
    delta_k,
    greedy_cover,
    growth_exponent,
    interval_bourgain_experiment,
    interval_weight_variation,
    m2star_lower,
    m2star_objective,
    m2star_oracle,
    m2star_upper,
    maximal_interval_delta,
    omega_k,
    rademacher_menshov_check,
    random_disjoint_intervals,
    weight_variation,
)
from walsh.seeding import derive_seed


def test_omega_k_examples():
    """Test the frequency intervals meeting Xi."""
    grid = Grid(1, 1)
    assert omega_k(FrequencySet.from_values(grid, [0]), 0) == [DyadicInterval(0, 0)]
    xi = FrequencySet.from_values(grid, [0, 1.5])
    assert omega_k(xi, 0) == [DyadicInterval(0, 0), DyadicInterval(0, 1)]
    assert omega_k(xi, -1) == [DyadicInterval(1, 0)]
    for k in (-1, 0, 1):
        assert len(omega_k(xi, k)) <= len(xi)


def test_frequency_set_deduplicates_and_checks_range():
    """Test that repeated points collapse and points must lie in [0, 2^K)."""
    grid = Grid(1, 1)
    assert len(FrequencySet.from_values(grid, [0.5, "1/2", 1])) == 2
    with pytest.raises(TileOutsideGrid):
        FrequencySet.from_values(grid, [2])


def test_band_projection_matches_modulated_expectation():
    """Test (f^ 1_omega)v = e(x (x) xi) E(f e(. (x) xi) | D_k)."""
    grid = Grid(2, 2)
    rng = np.random.default_rng(2)
    f = StepFunction(grid, rng.standard_normal(grid.size))
    for k in (-2, 0, 1):
        for cell in (0, 5, 12):
            omega = DyadicInterval.containing(grid.frequency_point(cell), -k)
            signs = grid.character_signs(grid.frequency_cell(omega.left_point))
            expected = signs * conditional_expectation(f.with_values(f.values * signs), k).values
            np.testing.assert_allclose(band_projection(f, [omega]).values, expected, atol=1e-12)


def test_band_projection_modulation_identity():
    """Test (f^ 1_omega)v(x + y) = e(y (x) xi) (f^ 1_omega)v(x) for y in [0, 1), k >= 0."""
    grid = Grid(2, 2)
    rng = np.random.default_rng(6)
    f = StepFunction(grid, rng.standard_normal(grid.size))
    cells = np.arange(grid.size)
    for k in range(grid.J + 1):
        for index in range(1 << (grid.K + k)):
            omega = DyadicInterval(-k, index)
            projected = band_projection(f, [omega]).values
            for y in range(1 << grid.K):
                sign = character(grid.time_point(y), omega.left_point)
                np.testing.assert_allclose(projected[cells ^ y], sign * projected, atol=1e-12)


def test_delta_k_examples():
    """Test zero weights, the identity multiplier and Plancherel."""
    grid = Grid(1, 1)
    rng = np.random.default_rng(8)
    f = StepFunction(grid, rng.standard_normal(grid.size))
    xi = FrequencySet.from_values(grid, [0])
    zero = WeightFamily.constant(xi, -1, 1, 0.0)
    assert not delta_k(f, zero, xi, 0).values.any()
    identity = WeightFamily.constant(xi, -1, -1, 1.0)
    np.testing.assert_allclose(delta_k(f, identity, xi, -1).values, f.values, atol=1e-12)

    grid = Grid(2, 2)
    f = StepFunction(grid, rng.standard_normal(grid.size))
    xi = FrequencySet.from_values(grid, [0.25, 1.5, 3])
    weights = WeightFamily.random(xi, -2, 2, rng)
    spectrum = walsh_fourier(f)
    for k in weights.k_range:
        expected = sum(
            weights.weight(k, omega) ** 2 * spectrum.cell_width * np.sum(spectrum.values[grid.frequency_slice(omega)] ** 2)
            for omega in omega_k(xi, k)
        )
        assert delta_k(f, weights, xi, k).l2_norm() ** 2 == pytest.approx(expected, rel=1e-10)


def test_delta_k_missing_weight():
    """Test that an absent weight is reported."""
    grid = Grid(1, 1)
    xi = FrequencySet.from_values(grid, [0, 1])
    weights = WeightFamily({(0, DyadicInterval(0, 0)): 1.0}, 0, 0)
    with pytest.raises(MissingWeight):
        delta_k(StepFunction.zeros(grid), weights, xi, 0)


def test_weight_family_checks_lengths():
    """Test that a weight keyed at k must sit on an interval of length 2^-k."""
    with pytest.raises(ValueError):
        WeightFamily({(1, DyadicInterval(0, 0)): 1.0}, 0, 1)


def test_weight_variation_examples():
    """Test sigma for constant weights and a single unit jump."""
    grid = Grid(2, 2)
    xi = FrequencySet.from_values(grid, [0.5, 2.25])
    assert weight_variation(WeightFamily.constant(xi, -2, 2, -0.5), xi, 3.0) == pytest.approx(0.5)
    single = FrequencySet.from_values(grid, [1])
    step = WeightFamily.from_function(single, 0, 1, lambda k, omega: 1.0 if k == 0 else 0.0)
    assert weight_variation(step, single, 2.2) == pytest.approx(2.0)


def test_covering_number_examples():
    """Test greedy covers on the documented examples."""
    assert covering_number(np.array([[0.3, 0.4]]), 0.1) == 1
    two = np.array([[0.0], [1.0]])
    assert covering_number(two, 0.4) == 2
    assert covering_number(two, 1.0) == 1


def test_covering_number_monotone():
    """Test that the greedy count never grows with the radius."""
    rng = np.random.default_rng(6)
    points = rng.standard_normal((30, 3))
    counts = [covering_number(points, lam) for lam in (0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 100.0)]
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] == 1


def test_chain_decompose_trivial_set():
    """Test that C = {0} has no levels and empty representations."""
    decomposition = chain_decompose(np.zeros((1, 2)))
    assert decomposition.levels == {}
    assert decomposition.representations == [[]]


def test_chain_decompose_two_points():
    """Test that v is represented by the single step v."""
    v = np.array([0.6, 0.8])
    decomposition = chain_decompose(np.array([[0.0, 0.0], v]))
    np.testing.assert_allclose(decomposition.reconstruct(1), v)
    assert decomposition.representations[0] == []
    (level, step), = decomposition.representations[1]
    np.testing.assert_allclose(step, v)
    assert np.linalg.norm(step) <= 2.0 ** (-level + 2)


def test_chain_decompose_random_sets():
    """Test representation, step norms and level sizes on random sets."""
    rng = np.random.default_rng(13)
    for trial in range(100):
        dim = 1 + trial % 4
        size = 2 + trial % 31
        points = rng.standard_normal((size, dim)) * rng.uniform(0.1, 3.0)
        points[0] = 0.0
        decomposition = chain_decompose(points)
        for i in range(size):
            np.testing.assert_allclose(decomposition.reconstruct(i), points[i], atol=1e-12)
            for level, step in decomposition.representations[i]:
                assert any(np.allclose(step, row) for row in decomposition.levels[level])
                assert np.linalg.norm(step) <= 2.0 ** (-level + 2) + 1e-12
        for level, members in decomposition.levels.items():
            assert len(members) <= covering_number(points, 2.0 ** -level) + 1


def test_chain_decompose_needs_origin():
    """Test that the point set must contain 0."""
    with pytest.raises(ValueError):
        chain_decompose(np.ones((3, 2)))


def test_chain_decompose_levels_follow_origin_cover():
    """Test that B_n is the greedy cover started at 0 when 0 is not the first point."""
    rng = np.random.default_rng(29)
    for trial in range(40):
        points = rng.standard_normal((3 + trial % 9, 2))
        points[-1] = 0.0
        points[1] = points[0]
        unique = np.unique(points, axis=0)
        origin = int(np.flatnonzero(~unique.any(axis=1))[0])
        decomposition = chain_decompose(points)
        for level, members in decomposition.levels.items():
            assert decomposition.centers[level] == greedy_cover(unique, 2.0 ** -level, origin)
            assert len(members) <= covering_number(unique, 2.0 ** -level, start=origin) + 1


def test_m2star_zero_family():
    """Test that all estimators vanish on the zero family."""
    family = MultiplierFamily(Grid(1, 1), np.zeros((3, 4)))
    value, _ = m2star_lower(family, restarts=2)
    assert value == 0.0
    assert m2star_oracle(family) == 0.0
    assert m2star_upper(family) == 0.0


def test_m2star_single_member():
    """Test that a single multiplier has norm ||m||_inf."""
    grid = Grid(2, 1)
    m = np.array([0.5, -2.0, 1.0, 0.0, 0.3, 1.5, -0.1, 0.2])
    family = MultiplierFamily(grid, m[np.newaxis, :])
    value, witness = m2star_lower(family, restarts=3, seed=4)
    assert value == pytest.approx(2.0, rel=1e-9)
    assert m2star_objective(family, witness) == pytest.approx(value, rel=1e-9)
    assert witness.l2_norm() == pytest.approx(1.0)
    assert m2star_oracle(family) == pytest.approx(2.0)
    assert m2star_upper(family) == pytest.approx(2.0)


def test_m2star_oracle_constant_family():
    """Test that repeating one multiplier does not change the norm."""
    grid = Grid(1, 2)
    m = np.linspace(-1.0, 0.75, grid.size)
    family = MultiplierFamily(grid, np.stack([m, m, m]))
    assert m2star_oracle(family) == pytest.approx(1.0)


def test_m2star_bounds_are_ordered():
    """Test lower <= oracle <= upper, oracle >= every sup norm, lower near oracle."""
    grid = Grid(1, 1)
    for seed in range(12):
        rng = np.random.default_rng(seed)
        members = 2 + seed % 3
        family = MultiplierFamily(grid, rng.standard_normal((members, grid.size)))
        lower, _ = m2star_lower(family, restarts=16, seed=seed)
        oracle = m2star_oracle(family)
        upper = m2star_upper(family)
        assert lower <= oracle * (1 + 1e-9)
        assert oracle <= upper * (1 + 1e-9)
        assert oracle >= family.sup_norms().max() * (1 - 1e-9)
        assert lower >= 0.95 * oracle


def test_m2star_oracle_too_large():
    """Test that the oracle refuses large enumerations."""
    grid = Grid(2, 2)
    family = MultiplierFamily(grid, np.arange(3 * grid.size, dtype=float).reshape(3, grid.size))
    with pytest.raises(InstanceTooLarge):
        m2star_oracle(family)


def test_m2star_lower_is_deterministic():
    """Test that equal seeds give equal estimates."""
    grid = Grid(2, 1)
    family = MultiplierFamily(grid, np.random.default_rng(1).standard_normal((3, grid.size)))
    first, _ = m2star_lower(family, restarts=4, seed=99)
    second, _ = m2star_lower(family, restarts=4, seed=99)
    assert first == second


def test_bourgain_experiment_zero_weights():
    """Test that vanishing weights give ratio 0."""
    grid = Grid(2, 2)
    xi = FrequencySet.from_values(grid, [0.5, 3])
    report = bourgain_experiment(xi, WeightFamily.constant(xi, -2, 2, 0.0), 2.2, 3, 0)
    assert report.max_ratio == 0.0
    assert [row.seed for row in report.rows] == [derive_seed(0, t) for t in range(3)]


def test_bourgain_experiment_single_frequency():
    """Test that one frequency with unit weights gives a finite ratio."""
    grid = Grid(2, 2)
    xi = FrequencySet.from_values(grid, [1.25])
    report = bourgain_experiment(xi, WeightFamily.constant(xi, -2, 2), 2.2, 4, 5)
    assert all(row.N == 1 and row.sigma == pytest.approx(1.0) for row in report.rows)
    assert 0 < report.max_ratio < np.inf


def test_interval_weight_family_checks():
    """Test overlap, foreign keys, range and missing weights."""
    grid = Grid(1, 1)
    with pytest.raises(ValueError, match="overlap"):
        IntervalWeightFamily(grid, (DyadicInterval(0, 0), DyadicInterval(1, 0)), {}, 0, 0)
    with pytest.raises(ValueError):
        IntervalWeightFamily(grid, (DyadicInterval(0, 0),), {(0, DyadicInterval(0, 1)): 1.0}, 0, 0)
    with pytest.raises(ValueError):
        IntervalWeightFamily(grid, (), {}, 0, 0)
    with pytest.raises(TileOutsideGrid):
        IntervalWeightFamily(grid, (DyadicInterval(1, 1),), {}, 0, 0)
    family = IntervalWeightFamily(grid, (DyadicInterval(0, 1), DyadicInterval(-1, 0)), {}, 0, 0)
    assert family.intervals == (DyadicInterval(-1, 0), DyadicInterval(0, 1))
    with pytest.raises(MissingWeight):
        family.weight(0, DyadicInterval(0, 1))


def test_random_disjoint_intervals():
    """Test count, range and pairwise disjointness of the drawn intervals."""
    grid = Grid(3, 2)
    rng = np.random.default_rng(8)
    for count in (1, 2, 4, 8, 16, 32):
        for _ in range(5):
            intervals = random_disjoint_intervals(grid, count, rng)
            assert len(intervals) == count
            for omega in intervals:
                grid.frequency_slice(omega)
            ordered = sorted(intervals, key=lambda omega: omega.left)
            assert all(a.disjoint(b) for a, b in zip(ordered, ordered[1:]))
    for count in (0, 3, 64):
        with pytest.raises(ValueError):
            random_disjoint_intervals(grid, count, rng)


def test_interval_weight_variation_examples():
    """Test sup over omega of the V^r norm in k."""
    grid = Grid(2, 2)
    intervals = (DyadicInterval(0, 0), DyadicInterval(1, 1))
    constant = IntervalWeightFamily.from_function(grid, intervals, -2, 2, lambda k, omega: -0.5)
    assert interval_weight_variation(constant, 3.0) == pytest.approx(0.5)

    def step(k, omega):
        if omega == intervals[0]:
            return 0.25
        return 1.0 if k == 0 else 0.0

    family = IntervalWeightFamily.from_function(grid, intervals, 0, 1, step)
    assert interval_weight_variation(family, 2.2) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        interval_weight_variation(family, 2.0)


def test_maximal_interval_delta_single_interval():
    """Test sup_k |eps_k (f^ 1_omega)v| = sup_k |eps_k| |(f^ 1_omega)v|."""
    grid = Grid(2, 2)
    rng = np.random.default_rng(3)
    f = StepFunction(grid, rng.standard_normal(grid.size))
    omega = DyadicInterval(0, 2)
    eps = {-1: 0.3, 0: -0.8, 1: 0.5}
    family = IntervalWeightFamily.from_function(grid, (omega,), -1, 1, lambda k, _: eps[k])
    expected = 0.8 * np.abs(band_projection(f, [omega]).values)
    np.testing.assert_allclose(maximal_interval_delta(f, family).values, expected, atol=1e-12)


def test_interval_bourgain_experiment_zero_weights():
    """Test that vanishing weights give ratio 0 and the derived seeds."""
    grid = Grid(2, 2)
    family = IntervalWeightFamily.from_function(grid, (DyadicInterval(1, 0),), -2, 2, lambda k, omega: 0.0)
    report = interval_bourgain_experiment(family, 2.5, 3, 4)
    assert report.max_ratio == 0.0
    assert [row.seed for row in report.rows] == [derive_seed(4, t) for t in range(3)]


def test_interval_bourgain_ratio_below_crude_bound():
    """Test ratio <= N^(1 - r/4) from the triangle inequality over omega."""
    grid = Grid(2, 3)
    rng = np.random.default_rng(12)
    r = 2.5
    for count in (1, 2, 4, 8):
        intervals = random_disjoint_intervals(grid, count, rng)
        family = IntervalWeightFamily.random(grid, intervals, -grid.K, grid.J, rng)
        report = interval_bourgain_experiment(family, r, 3, count)
        assert all(row.N == count for row in report.rows)
        assert 0 < report.max_ratio <= count ** (1 - r / 4) * (1 + 1e-9)


def test_growth_exponent():
    """Test the log-log slope."""
    sizes = [2, 4, 8]
    assert growth_exponent(sizes, [3 * n ** 0.3 for n in sizes]) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        growth_exponent([2], [1.0])


def test_rademacher_menshov_check():
    """Test orthogonality, restriction and the two-term split on random weights."""
    grid = Grid(2, 2)
    rng = np.random.default_rng(10)
    for size in (2, 3, 5):
        xi = FrequencySet.random(grid, size, rng)
        weights = WeightFamily.random(xi, -2, 2, rng)
        f = StepFunction(grid, rng.standard_normal(grid.size))
        report = rademacher_menshov_check(f, weights, xi)
        assert report.holds
        np.testing.assert_allclose(report.pieces.sum(axis=0), band_projection(
            f, omega_k(xi, -2)).values, atol=1e-12)
