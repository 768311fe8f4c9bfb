import random
from fractions import Fraction

import pytest

from arctax.affinity import AffinityLevel
from arctax.diagnostics import (
    DEFAULT_CELL_AXIS,
    DEFAULT_GRID_AXIS,
    GapThresholds,
    aggregate_seeds,
    ceiling_report,
    compare_groups,
    compositional_gap,
    failure_concentration,
    is_gap,
    mean_results_by_task,
    sensitivity,
    t_interval,
)
from arctax.model import Category, TaskResult


def result(i, cell, grid, category=None, seed=None, base=None):
    return TaskResult(
        task_id=f"{i:08x}", cell_acc=cell, grid_acc=grid,
        category=category, seed=seed, base_cell_acc=base,
    )


OPERATING_POINT = GapThresholds(cell_min=0.80, grid_max=0.10)


# ---------------------------------------------------------------------------
# Compositional gap
# ---------------------------------------------------------------------------

def test_gap_direct_example():
    results = [result(1, 0.95, 0.0), result(2, 0.5, 0.0), result(3, 0.9, 0.5)]
    report = compositional_gap(results, OPERATING_POINT)
    assert report.n_gap == 1
    assert report.fraction == Fraction(1, 3)
    assert report.gap_task_ids == ("00000001",)


def test_gap_zero_grid_threshold_is_empty():
    results = [result(1, 0.99, 0.0), result(2, 0.99, 0.0)]
    report = compositional_gap(results, GapThresholds(cell_min=0.8, grid_max=0.0))
    assert report.n_gap == 0


def test_gap_strict_inequalities():
    results = [result(1, 0.80, 0.05), result(2, 0.81, 0.10)]
    report = compositional_gap(results, OPERATING_POINT)
    # 0.80 is not > 0.80 and 0.10 is not < 0.10.
    assert report.n_gap == 0


def test_gap_empty_results_is_an_error():
    with pytest.raises(ValueError):
        compositional_gap([], OPERATING_POINT)


def test_gap_thresholds_validated():
    with pytest.raises(ValueError):
        GapThresholds(cell_min=1.5, grid_max=0.0)


def _random_results(rng, n):
    out = []
    for i in range(n):
        cell = rng.choice([rng.random(), rng.choice([0.0, 0.8, 0.85, 1.0])])
        grid = rng.choice([rng.random(), rng.choice([0.0, 0.1, 0.02])])
        out.append(result(i, cell, grid))
    return out


def test_gap_matches_brute_force_on_random_sets():
    rng = random.Random(1234)
    for _ in range(100):
        results = _random_results(rng, rng.randint(1, 1000))
        thresholds = GapThresholds(cell_min=rng.random(), grid_max=rng.random())
        report = compositional_gap(results, thresholds)
        expected = [
            r.task_id
            for r in results
            if r.cell_acc > thresholds.cell_min and r.grid_acc < thresholds.grid_max
        ]
        assert report.n_gap == len(expected)
        assert set(report.gap_task_ids) == set(expected)


# ---------------------------------------------------------------------------
# Sensitivity grid
# ---------------------------------------------------------------------------

def test_default_axes_are_six_by_eleven():
    assert len(DEFAULT_CELL_AXIS) == 6
    assert len(DEFAULT_GRID_AXIS) == 11
    assert DEFAULT_CELL_AXIS[0] == 0.70 and DEFAULT_CELL_AXIS[-1] == 0.95
    assert DEFAULT_GRID_AXIS[0] == 0.00 and DEFAULT_GRID_AXIS[-1] == 0.20


def test_sensitivity_has_66_cells_and_agrees_with_gap():
    rng = random.Random(7)
    results = _random_results(rng, 250)
    grid = sensitivity(results)
    assert grid.total_cells() == 66
    i = grid.cell_axis.index(0.80)
    j = grid.grid_axis.index(0.10)
    direct = compositional_gap(results, GapThresholds(0.80, 0.10))
    assert grid.cells[i][j] == direct.fraction


def test_sensitivity_monotonicity_on_random_sets():
    rng = random.Random(99)
    for _ in range(20):
        results = _random_results(rng, rng.randint(1, 400))
        grid = sensitivity(results)
        for i, row in enumerate(grid.cells):
            for j, value in enumerate(row):
                assert 0 <= value <= 1
                if i + 1 < len(grid.cells):
                    # Raising the cell floor can only shrink the tally.
                    assert grid.cells[i + 1][j] <= value
                if j + 1 < len(row):
                    # Raising the grid cap can only grow it.
                    assert row[j + 1] >= value


def test_sensitivity_rejects_unsorted_axes():
    results = [result(1, 0.9, 0.0)]
    with pytest.raises(ValueError, match="sorted"):
        sensitivity(results, cell_axis=[0.8, 0.7], grid_axis=[0.0, 0.1])


def test_sensitivity_zero_grid_column_is_all_zero():
    rng = random.Random(3)
    results = _random_results(rng, 100)
    grid = sensitivity(results)
    j = grid.grid_axis.index(0.0)
    assert all(row[j] == 0 for row in grid.cells)


# ---------------------------------------------------------------------------
# Ceilings
# ---------------------------------------------------------------------------

def test_ceiling_report_counts_exact_zero_only():
    results = [result(1, 0.9, 0.0), result(2, 0.9, 0.1)]
    mapping = {"00000001": Category.A2, "00000002": Category.A2}
    report = ceiling_report(results, mapping, Category.A2)
    assert (report.n_tasks, report.n_zero_grid) == (2, 1)
    assert report.zero_fraction == Fraction(1, 2)
    assert report.exemplar_ids == ("00000001",)


def test_ceiling_report_21_a2_tasks_9_stuck():
    results = [result(i, 0.99, 0.0 if i < 9 else 0.2) for i in range(21)]
    mapping = {r.task_id: Category.A2 for r in results}
    report = ceiling_report(results, mapping, Category.A2)
    assert (report.n_tasks, report.n_zero_grid) == (21, 9)
    assert report.zero_fraction == Fraction(9, 21)


def test_ceiling_report_empty_category_sentinel():
    results = [result(1, 0.9, 0.0)]
    mapping = {"00000001": Category.S3}
    report = ceiling_report(results, mapping, Category.A2)
    assert report.n_tasks == 0
    assert report.zero_fraction is None


def test_ceiling_report_requires_mapping_coverage():
    results = [result(1, 0.9, 0.0)]
    with pytest.raises(KeyError):
        ceiling_report(results, {}, Category.A2)


def test_near_zero_grid_is_not_a_ceiling_failure():
    results = [result(1, 0.9, 1e-9)]
    mapping = {"00000001": Category.A2}
    assert ceiling_report(results, mapping, Category.A2).n_zero_grid == 0


# ---------------------------------------------------------------------------
# Failure concentration
# ---------------------------------------------------------------------------

def test_failure_share_example():
    results = [
        result(1, 0.9, 0.0, Category.S3),
        result(2, 0.9, 0.0, Category.S3),
        result(3, 0.9, 0.0, Category.C1),
        result(4, 0.9, 0.5, Category.C1),
    ]
    report = failure_concentration(results)
    assert report.n_failures == 3
    assert report.n_failures_low == 2
    assert report.share == Fraction(2, 3)
    assert report.per_category_failure_rates["C1"].rate == Fraction(1, 2)


def test_failure_share_invariant_under_permutation():
    rng = random.Random(11)
    results = [
        result(i, 0.9, rng.choice([0.0, 0.2]), rng.choice(list(Category)))
        for i in range(60)
    ]
    base = failure_concentration(results)
    shuffled = results[:]
    rng.shuffle(shuffled)
    again = failure_concentration(shuffled)
    assert base.share == again.share
    assert base.per_category_failure_rates == again.per_category_failure_rates


def test_no_failures_sentinel():
    report = failure_concentration([result(1, 0.9, 0.5, Category.S3)])
    assert report.n_failures == 0
    assert report.share is None


def test_missing_category_is_an_error():
    with pytest.raises(ValueError, match="category"):
        failure_concentration([result(1, 0.9, 0.0)])


def test_ambiguous_failures_never_count_as_low():
    results = [
        result(1, 0.9, 0.0, Category.AMBIGUOUS),
        result(2, 0.9, 0.0, Category.A2),
    ]
    report = failure_concentration(results)
    assert report.n_failures == 2
    assert report.n_failures_low == 1


def test_failure_share_respects_overrides():
    results = [result(1, 0.9, 0.0, Category.C1)]
    report = failure_concentration(results, {Category.C1: AffinityLevel.LOW})
    assert report.n_failures_low == 1


# ---------------------------------------------------------------------------
# Seed aggregation
# ---------------------------------------------------------------------------

def test_interval_zero_variance():
    ci = t_interval([0.5] * 5)
    assert (ci.mean, ci.lower, ci.upper) == (0.5, 0.5, 0.5)
    assert not ci.zero_width_warning


def test_interval_reproduces_run_level_summary():
    ci = t_interval([0.00279, 0.00279, 0.00279, 0.00279, 0.00559])
    assert ci.mean == pytest.approx(0.00335, abs=1e-12)
    assert ci.lower == pytest.approx(0.0017952, abs=1e-6)
    assert ci.upper == pytest.approx(0.0049048, abs=1e-6)


def test_interval_two_extreme_values_is_reported_raw():
    ci = t_interval([0.0, 1.0])
    assert ci.mean == 0.5
    assert ci.lower < 0.0 and ci.upper > 1.0  # never clamped


def test_interval_single_value_warns():
    ci = t_interval([0.25])
    assert ci.zero_width_warning
    assert (ci.lower, ci.upper) == (0.25, 0.25)


def test_interval_empty_is_an_error():
    with pytest.raises(ValueError):
        t_interval([])


def test_aggregate_seeds_by_label():
    out = aggregate_seeds({"b": [0.1, 0.2], "a": [0.3, 0.3]})
    assert list(out) == ["a", "b"]
    assert out["a"].mean == pytest.approx(0.3)


def test_mean_results_by_task_collapses_seeds():
    results = [
        result(1, 0.9, 0.0, Category.S3, seed=0),
        result(1, 0.8, 0.1, Category.S3, seed=1),
        result(2, 0.7, 0.2, Category.C1, seed=0),
    ]
    collapsed = mean_results_by_task(results)
    assert len(collapsed) == 2
    first = collapsed[0]
    assert first.task_id == "00000001"
    assert first.cell_acc == pytest.approx(0.85)
    assert first.grid_acc == pytest.approx(0.05)
    assert first.category is Category.S3
    assert first.seed is None


def test_mean_results_by_task_clears_conflicting_categories():
    results = [
        result(1, 0.9, 0.0, Category.S3, seed=0),
        result(1, 0.9, 0.0, Category.C1, seed=1),
    ]
    (collapsed,) = mean_results_by_task(results)
    assert collapsed.category is None


# ---------------------------------------------------------------------------
# Group comparison
# ---------------------------------------------------------------------------

def test_compare_identical_groups():
    comparison = compare_groups([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert comparison.cohens_d == 0.0
    assert comparison.t_p == 1.0
    assert comparison.u_p == pytest.approx(1.0, abs=0.2)


def test_compare_complete_separation():
    comparison = compare_groups([1.0, 2.0], [3.0, 4.0], "lo", "hi")
    assert comparison.u_p == pytest.approx(1 / 3, abs=1e-12)
    assert comparison.group_a_label == "lo"


def test_compare_degenerate_sizes_error():
    with pytest.raises(ValueError):
        compare_groups([1.0], [2.0, 3.0])


def test_compare_constant_equal_groups_zero_effect():
    comparison = compare_groups([2.0, 2.0], [2.0, 2.0])
    assert comparison.cohens_d == 0.0
    assert comparison.t_p == 1.0


def test_is_gap_predicate():
    assert is_gap(result(1, 0.81, 0.09), OPERATING_POINT)
    assert not is_gap(result(1, 0.79, 0.09), OPERATING_POINT)
