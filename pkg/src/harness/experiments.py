"""Trial functions for every experiment.

A trial gets the run configuration and its trial number, derives its own
seed and returns CSV rows, the metrics it measured and any violated exact
assertion. Trials are module-level functions so a process pool can run them.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from harness.config import ConfigError, Experiment, ExperimentConfig
from harness.inputs import InputKind, generate_inputs, random_bitiles
from walsh.carleson_operator import (
    carleson_Wmax,
    frequency_stack,
    is_chain,
    one_tree_bound_ratios,
    tree_bound_ratios,
    two_tree_bound_ratios,
    weak_type_experiment,
)
from walsh.dyadic_core import DyadicInterval, StepFunction, maximal_function
from walsh.maximal_multiplier import (
    ORACLE_ASSIGNMENT_LIMIT,
    FrequencySet,
    IntervalWeightFamily,
    MultiplierFamily,
    WeightFamily,
    bourgain_experiment,
    growth_exponent,
    interval_bourgain_experiment,
    m2star_lower,
    m2star_oracle,
    m2star_upper,
    random_disjoint_intervals,
)
from walsh.seeding import derive_seed
from walsh.size_selection import (
    collection_size,
    lower_tile_coefficients,
    select_forest,
    split_forest,
    tree_size,
    tree_variation_field,
)
from walsh.tile_geometry import Forest, all_bitiles, counting_field, maximal_two_tree
from walsh.variation import (
    martingale_greedy_field,
    martingale_jump_field,
    martingale_variation_field,
    product_variation_bound,
)

logger = logging.getLogger(__name__)

JUMP_FRACTIONS = (1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0)
VARIATION_EXPONENTS = (2.1, 2.5, 3.0)
TREES_PER_TRIAL = 5
BOURGAIN_SIZES = (2, 4, 8)
WEAK_TYPE_P = (1.5, 2.0, 3.0)
WEAK_TYPE_LAMBDAS = (0.25, 0.5, 1.0, 2.0, 4.0)
CROSSCHECK_RESTARTS = 32
TOLERANCE = 1e-9


@dataclass
class TrialResult:
    rows: List[Dict[str, Any]] = field(default_factory=list)
    metrics: Dict[str, float] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)

    def measure(self, metric: str, value: float) -> None:
        if math.isfinite(value):
            self.metrics[metric] = max(self.metrics.get(metric, 0.0), float(value))


def _gaussian(cfg: ExperimentConfig, rng: np.random.Generator, dim: int = 1) -> StepFunction:
    grid = cfg.grid
    shape = (grid.size,) if dim == 1 else (grid.size, dim)
    return StepFunction(grid, rng.standard_normal(shape))


def jump_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """||lambda M_lambda^(1/2)||_2 / ||f||_2 for H-valued Gaussian f."""
    seed = derive_seed(cfg.seed, trial)
    rng = np.random.default_rng(seed)
    dim = 1 + trial % 4
    f = _gaussian(cfg, rng, dim)
    norm = f.l2_norm()
    top = f.lp_norm(math.inf)
    result = TrialResult()
    for fraction in JUMP_FRACTIONS:
        lam = fraction * top
        jumps = martingale_jump_field(f, lam)
        greedy = martingale_greedy_field(f, lam)
        if np.any(jumps.values > greedy.values):
            result.violations.append(f"trial {trial}: jump count above greedy count at lambda={lam:.6g}")
        lhs = jumps.with_values(lam * np.sqrt(jumps.values)).l2_norm()
        ratio = lhs / norm
        result.rows.append(
            {"trial": trial, "seed": seed, "dim": dim, "lambda": lam, "lhs": lhs, "rhs": norm, "ratio": ratio}
        )
        result.measure("ratio", ratio)
    return result


def variation_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """L^q norms of x -> ||E(f|D_k)(x)||_{V^r} and the Minkowski product bound."""
    seed = derive_seed(cfg.seed, trial)
    rng = np.random.default_rng(seed)
    dim = 1 + trial % 4
    f = _gaussian(cfg, rng, dim)
    result = TrialResult()
    for r in sorted(set(VARIATION_EXPONENTS) | {cfg.r}):
        field_r = martingale_variation_field(f, r)
        for q in (2.0, r) if r == 2.5 else (2.0,):
            lhs = field_r.lp_norm(q)
            rhs = f.lp_norm(q)
            result.rows.append({"trial": trial, "seed": seed, "quantity": "martingale", "dim": dim,
                                "r": r, "q": q, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs})
            result.measure(f"ratio_r{r:g}_q{q:g}", lhs / rhs)

    levels = cfg.grid.bits + 1
    width = 1 + trial % 8
    a = rng.standard_normal((levels, width))
    b = rng.standard_normal((levels, width))
    lhs, rhs = product_variation_bound(a, b, cfg.r)
    if lhs > 2 * rhs * (1 + TOLERANCE):
        result.violations.append(f"trial {trial}: product variation {lhs:.6g} above twice {rhs:.6g}")
    result.rows.append({"trial": trial, "seed": seed, "quantity": "product", "dim": width,
                        "r": cfg.r, "q": 2.0, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs})
    result.measure("product", lhs / rhs)
    return result


def size_bound_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """size <= inf M_2 f exactly, and the tree variation estimate at s = 2."""
    grid = cfg.grid
    seed = derive_seed(cfg.seed, trial)
    rng = np.random.default_rng(seed)
    f = _gaussian(cfg, rng)
    maximal = maximal_function(f, 2.0).values
    universe = all_bitiles(grid)
    result = TrialResult()
    for _ in range(TREES_PER_TRIAL):
        scale = int(rng.integers(1 - grid.K, grid.J + 1))
        top = DyadicInterval(scale, int(rng.integers(0, 1 << (grid.J - scale))))
        xi = grid.frequency_point(int(rng.integers(grid.size)))
        keep = rng.random(len(universe)) < 0.7
        tree = maximal_two_tree([P for P, kept in zip(universe, keep) if kept], top, xi)
        if not tree.bitiles:
            continue
        coeffs = lower_tile_coefficients(tree.bitiles, f)
        size = tree_size(tree, f, coeffs)
        floor = float(maximal[grid.time_slice(top)].min())
        if size > floor + 1e-12:
            result.violations.append(f"trial {trial}: tree size {size:.6g} above inf M_2 f = {floor:.6g}")
        lhs = tree_variation_field(tree, coeffs, grid, cfg.r, strict=False).l2_norm()
        rhs = size * math.sqrt(float(top.length))
        ratio = lhs / rhs if rhs > 0 else 0.0
        result.rows.append({"trial": trial, "seed": seed, "tree_bitiles": len(tree), "size": size,
                            "maximal_inf": floor, "lhs": lhs, "rhs": rhs, "ratio": ratio})
        result.measure("ratio", ratio)
    return result


def bessel_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """select_forest partitions S, meets the level size bound, Bessel ratios."""
    grid = cfg.grid
    seed = derive_seed(cfg.seed, trial)
    rng = np.random.default_rng(seed)
    f = _gaussian(cfg, rng)
    bitiles = random_bitiles(grid, rng, 0.5)
    levels = select_forest(bitiles, f)
    coeffs = lower_tile_coefficients(bitiles, f)
    result = TrialResult()
    assigned = [P for level in levels for P in level.bitiles]
    if len(assigned) != len(bitiles) or set(assigned) != set(bitiles):
        result.violations.append(f"trial {trial}: levels do not partition the bitile set")
    norm2 = f.l2_norm() ** 2
    for level in levels:
        size = collection_size(level.bitiles, f, coeffs)
        if size > 2.0 ** -level.n * (1 + TOLERANCE):
            result.violations.append(f"trial {trial}: level {level.n} has size {size:.6g}")
        if level.residual:
            continue
        result.rows.append({"trial": trial, "seed": seed, "n": level.n, "trees": len(level.forest),
                            "top_measure": level.top_measure, "f_norm2": norm2, "ratio": level.bessel_ratio})
        result.measure("ratio", level.bessel_ratio)
    return result


def bourgain_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """One random frequency set and weight family per trial, N cycling through 2, 4, 8.

    Each trial also draws N disjoint intervals with k-dependent weights and
    records that ratio as ratio_disjoint.
    """
    grid = cfg.grid
    sizes = [n for n in BOURGAIN_SIZES if n <= grid.size] or [grid.size]
    n = sizes[trial % len(sizes)]
    rng = np.random.default_rng(derive_seed(cfg.seed, trial))
    xi_set = FrequencySet.random(grid, n, rng)
    weights = WeightFamily.random(xi_set, -grid.K, grid.J, rng)
    report = bourgain_experiment(xi_set, weights, cfg.r, 1, derive_seed(cfg.seed, trial, 1))
    result = TrialResult()
    for row in report.rows:
        result.rows.append({**asdict(row), "family": "nested"})
        result.measure("ratio", row.ratio)

    intervals = random_disjoint_intervals(grid, n, rng)
    interval_weights = IntervalWeightFamily.random(grid, intervals, -grid.K, grid.J, rng)
    disjoint = interval_bourgain_experiment(interval_weights, cfg.r, 1, derive_seed(cfg.seed, trial, 2))
    for row in disjoint.rows:
        result.rows.append({**asdict(row), "family": "disjoint"})
        result.measure("ratio_disjoint", row.ratio)
    return result


def bourgain_growth(cfg: ExperimentConfig, rows: Sequence[Dict[str, Any]]) -> Tuple[Dict[str, Any], List[str]]:
    """Fit the growth in N of max ||sup_k |Delta_k f| ||_2 / (sigma ||f||_2)."""
    exponent = cfg.r / 4 - 0.5
    peaks: Dict[int, float] = {}
    for row in rows:
        if row["family"] != "nested":
            continue
        value = row["ratio"] * row["N"] ** exponent
        peaks[row["N"]] = max(peaks.get(row["N"], 0.0), value)
    usable = {n: v for n, v in peaks.items() if v > 0}
    if len(usable) < 2:
        return {"growth_exponent": None}, []
    ns = sorted(usable)
    measured = growth_exponent(ns, [usable[n] for n in ns])
    violations = []
    if measured > exponent + 0.1:
        violations.append(f"growth exponent {measured:.4f} above r/4 - 1/2 + 0.1 = {exponent + 0.1:.4f}")
    return {"growth_exponent": measured}, violations


def _upper_tile_overlaps(bitiles) -> int:
    bitiles = sorted(bitiles)
    return sum(
        1
        for i, P in enumerate(bitiles)
        for Q in bitiles[i + 1:]
        if not P.upper.disjoint(Q.upper)
    )


def _finite_max(ratios: np.ndarray) -> float:
    return 0.0 if np.all(np.isnan(ratios)) else float(np.nanmax(ratios))


def tree_pointwise_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """W^max f(x) over the mixed, 2-tree and 1-tree bounds outside their exceptional sets.

    ratio divides by (sigma + gamma) beta^(r/4-1/2), ratio_two_tree takes W^max of
    the 2-tree part over gamma beta^(r/4-1/2) and ratio_one_tree that of the
    1-tree part over sigma beta^(r/4-1/2).
    """
    grid = cfg.grid
    seed = derive_seed(cfg.seed, trial)
    rng = np.random.default_rng(seed)
    f = _gaussian(cfg, rng)
    levels = select_forest(random_bitiles(grid, rng, 0.3), f)
    trees = [tree for level in levels if not level.residual for tree in level.forest]
    result = TrialResult()
    if not trees:
        return result
    forest = Forest(tuple(trees))
    bitiles = sorted(forest.bitiles())
    coeffs = lower_tile_coefficients(bitiles, f)
    sigma = max(abs(coeffs[P]) / math.sqrt(float(P.time.length)) for P in bitiles)
    beta = max(1.0, float(np.median(counting_field(forest, grid))))
    split = split_forest(bitiles, forest)
    variation = np.zeros(grid.size)
    for tree in split.two_tree_forest:
        variation = np.maximum(variation, tree_variation_field(tree, coeffs, grid, cfg.r).values)
    gamma = float(np.percentile(variation, 75)) or sigma

    for _ in range(4):
        x, theta = (int(v) for v in rng.integers(grid.size, size=2))
        if not is_chain(frequency_stack(bitiles, grid, x, theta)):
            result.violations.append(f"trial {trial}: frequency stack at ({x}, {theta}) is not a chain")

    wmax = carleson_Wmax(bitiles, f, "oracle", cfg.restarts, derive_seed(cfg.seed, trial, 1))
    ratios, excluded = tree_bound_ratios(bitiles, forest, f, cfg.r, beta, gamma, sigma, wmax)
    two_ratios, _ = two_tree_bound_ratios(bitiles, forest, f, cfg.r, beta, gamma, "oracle", cfg.restarts,
                                          derive_seed(cfg.seed, trial, 2))
    one_ratios, _ = one_tree_bound_ratios(bitiles, forest, f, cfg.r, beta, sigma, "oracle", cfg.restarts,
                                          derive_seed(cfg.seed, trial, 3))
    ratio, ratio_two, ratio_one = (_finite_max(values) for values in (ratios, two_ratios, one_ratios))
    overlaps = _upper_tile_overlaps(split.one_tree_bitiles)
    if overlaps:
        result.violations.append(f"trial {trial}: {overlaps} overlapping upper tiles in the 1-tree part")
    result.rows.append({"trial": trial, "seed": seed, "bitiles": len(bitiles), "trees": len(forest),
                        "beta": beta, "gamma": gamma, "sigma": sigma, "excluded_measure": excluded.measure,
                        "upper_overlaps": overlaps, "ratio": ratio, "ratio_two_tree": ratio_two,
                        "ratio_one_tree": ratio_one})
    result.measure("ratio", ratio)
    result.measure("ratio_two_tree", ratio_two)
    result.measure("ratio_one_tree", ratio_one)
    return result


def weak_type_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """lambda^p m{W^max 1_F > lambda} / |F| and lambda^p m(E u E^*) / |F| on a random dyadic F, S = all bitiles."""
    grid = cfg.grid
    seed = derive_seed(cfg.seed, trial)
    generated = generate_inputs(InputKind.INDICATOR_SET, grid, seed)
    cells = generated.cells
    wmax = carleson_Wmax(all_bitiles(grid), generated.function, "ascent", cfg.restarts, seed)
    upper = float(wmax.upper.values.max(initial=0.0))
    result = TrialResult()
    for p in (cfg.p,) if cfg.p else WEAK_TYPE_P:
        for lam in WEAK_TYPE_LAMBDAS:
            report = weak_type_experiment(cells, p, lam, grid, seed=seed, wmax=wmax, r=cfg.r)
            if lam >= upper and report.meas_level_set > 0:
                result.violations.append(f"trial {trial}: level set above the upper bound at lambda={lam}")
            result.rows.append({**report.row(), "measFirst": report.first_measure,
                                "measExceptional": report.exceptional_measure,
                                "measOutside": report.level_set_outside, "levels": report.levels})
            result.measure(f"ratio_p{p:g}", report.ratio)
            result.measure(f"exceptional_p{p:g}", report.exceptional_ratio)
    return result


def _oracle_members(size: int) -> int:
    members = 1
    while (members + 1) ** size <= ORACLE_ASSIGNMENT_LIMIT and members < 4:
        members += 1
    return members


def oracle_crosscheck_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """lower <= oracle <= upper and lower within 5% of the oracle."""
    grid = cfg.grid
    most = _oracle_members(grid.size)
    if most < 2:
        raise ConfigError(f"{grid} has too many cells for the exhaustive oracle")
    members = 1 + trial % most
    seed = derive_seed(cfg.seed, trial)
    rng = np.random.default_rng(seed)
    family = MultiplierFamily(grid, rng.standard_normal((members, grid.size)))
    lower, _ = m2star_lower(family, max(cfg.restarts, CROSSCHECK_RESTARTS), derive_seed(cfg.seed, trial, 1))
    oracle = m2star_oracle(family)
    upper = m2star_upper(family)
    result = TrialResult()
    if lower > oracle * (1 + TOLERANCE):
        result.violations.append(f"trial {trial}: ascent {lower:.10g} above oracle {oracle:.10g}")
    if oracle > upper * (1 + TOLERANCE):
        result.violations.append(f"trial {trial}: oracle {oracle:.10g} above upper bound {upper:.10g}")
    if lower < 0.95 * oracle:
        result.violations.append(f"trial {trial}: ascent {lower:.10g} more than 5% below oracle {oracle:.10g}")
    result.rows.append({"trial": trial, "seed": seed, "members": members,
                        "lower": lower, "oracle": oracle, "upper": upper})
    return result


@dataclass(frozen=True)
class ExperimentDefinition:
    columns: Tuple[str, ...]
    trial: Callable[[ExperimentConfig, int], TrialResult]
    finalize: Optional[Callable[[ExperimentConfig, Sequence[Dict[str, Any]]], Tuple[Dict[str, Any], List[str]]]] = None


EXPERIMENTS: Dict[Experiment, ExperimentDefinition] = {
    Experiment.JUMP: ExperimentDefinition(
        ("trial", "seed", "dim", "lambda", "lhs", "rhs", "ratio"), jump_trial),
    Experiment.VARIATION: ExperimentDefinition(
        ("trial", "seed", "quantity", "dim", "r", "q", "lhs", "rhs", "ratio"), variation_trial),
    Experiment.SIZE_BOUND: ExperimentDefinition(
        ("trial", "seed", "tree_bitiles", "size", "maximal_inf", "lhs", "rhs", "ratio"), size_bound_trial),
    Experiment.BESSEL: ExperimentDefinition(
        ("trial", "seed", "n", "trees", "top_measure", "f_norm2", "ratio"), bessel_trial),
    Experiment.BOURGAIN: ExperimentDefinition(
        ("N", "r", "sigma", "lhs", "rhs", "ratio", "seed", "family"), bourgain_trial, bourgain_growth),
    Experiment.TREE_POINTWISE: ExperimentDefinition(
        ("trial", "seed", "bitiles", "trees", "beta", "gamma", "sigma", "excluded_measure",
         "upper_overlaps", "ratio", "ratio_two_tree", "ratio_one_tree"), tree_pointwise_trial),
    Experiment.WEAK_TYPE: ExperimentDefinition(
        ("gridJ", "gridK", "p", "lambda", "measF", "measLevelSet", "ratio", "seed"), weak_type_trial),
    Experiment.ORACLE_CROSSCHECK: ExperimentDefinition(
        ("trial", "seed", "members", "lower", "oracle", "upper"), oracle_crosscheck_trial),
}
