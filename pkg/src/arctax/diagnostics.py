"""Performance diagnostics over per-task result records.

Covers the dissociation tally between local (cell) and global (grid)
accuracy, its threshold-sensitivity sweep, zero-grid ceiling accounting,
failure concentration by affinity, multi-seed aggregation, and two-group
comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .affinity import AffinityLevel, theoretical_affinity
from .model import Category, TaskResult
from .stats import cohens_d, mann_whitney_u, t_quantile, welch_t, _mean, _sample_variance

#: Default sweep axes: 6 cell thresholds x 11 grid thresholds = 66 pairs.
DEFAULT_CELL_AXIS = tuple(round(x / 100, 2) for x in range(70, 96, 5))
DEFAULT_GRID_AXIS = tuple(round(x / 100, 2) for x in range(0, 21, 2))


@dataclass(frozen=True)
class GapThresholds:
    cell_min: float
    grid_max: float

    def __post_init__(self) -> None:
        for name, value in (("cell_min", self.cell_min), ("grid_max", self.grid_max)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of range [0, 1]: {value!r}")


#: Reference operating point: high local understanding, failed global synthesis.
DEFAULT_THRESHOLDS = GapThresholds(cell_min=0.80, grid_max=0.10)


@dataclass(frozen=True)
class GapReport:
    thresholds: GapThresholds
    n_total: int
    n_gap: int
    fraction: Fraction
    gap_task_ids: tuple[str, ...]


def is_gap(result: TaskResult, thresholds: GapThresholds) -> bool:
    """Both inequalities are strict: cell above the floor, grid below the cap."""
    return result.cell_acc > thresholds.cell_min and result.grid_acc < thresholds.grid_max


def compositional_gap(results: Sequence[TaskResult], thresholds: GapThresholds) -> GapReport:
    """Tally results that pair high cell accuracy with low grid accuracy."""
    if not results:
        raise ValueError("no results to analyze")
    gap_ids = sorted(r.task_id for r in results if is_gap(r, thresholds))
    return GapReport(
        thresholds=thresholds,
        n_total=len(results),
        n_gap=len(gap_ids),
        fraction=Fraction(len(gap_ids), len(results)),
        gap_task_ids=tuple(gap_ids),
    )


@dataclass(frozen=True)
class SensitivityGrid:
    cell_axis: tuple[float, ...]
    grid_axis: tuple[float, ...]
    cells: tuple[tuple[Fraction, ...], ...]  # rows = cell axis, cols = grid axis

    def majority_cells(self) -> int:
        """Number of threshold pairs at which more than half the tasks gap."""
        return sum(1 for row in self.cells for value in row if value > Fraction(1, 2))

    def total_cells(self) -> int:
        return len(self.cell_axis) * len(self.grid_axis)


def _check_axis(name: str, axis: Sequence[float]) -> tuple[float, ...]:
    if not axis:
        raise ValueError(f"{name} axis is empty")
    if list(axis) != sorted(axis):
        raise ValueError(f"{name} axis must be sorted ascending: {axis!r}")
    for value in axis:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} axis value out of range [0, 1]: {value!r}")
    return tuple(axis)


def sensitivity(
    results: Sequence[TaskResult],
    cell_axis: Sequence[float] = DEFAULT_CELL_AXIS,
    grid_axis: Sequence[float] = DEFAULT_GRID_AXIS,
) -> SensitivityGrid:
    """Gap fraction at every (cell threshold, grid threshold) pair."""
    if not results:
        raise ValueError("no results to analyze")
    cell_axis = _check_axis("cell", cell_axis)
    grid_axis = _check_axis("grid", grid_axis)
    pairs = [(r.cell_acc, r.grid_acc) for r in results]
    n = len(pairs)
    rows = []
    for cell_min in cell_axis:
        row = []
        for grid_max in grid_axis:
            n_gap = sum(1 for c, g in pairs if c > cell_min and g < grid_max)
            row.append(Fraction(n_gap, n))
        rows.append(tuple(row))
    return SensitivityGrid(cell_axis=cell_axis, grid_axis=grid_axis, cells=tuple(rows))


@dataclass(frozen=True)
class CeilingReport:
    """Zero-grid-accuracy accounting for one category."""

    category: Category
    n_tasks: int
    n_zero_grid: int
    zero_fraction: Fraction | None  # None encodes the 0-over-0 sentinel
    exemplar_ids: tuple[str, ...]


def ceiling_report(
    results: Sequence[TaskResult],
    mapping: Mapping[str, Category],
    category: Category,
) -> CeilingReport:
    """Count tasks of ``category`` stuck at exactly 0.0 grid accuracy.

    Zero is a property of the stored value, not a tolerance band: only
    records whose grid accuracy is exactly 0.0 count.
    """
    for result in results:
        if result.task_id not in mapping:
            raise KeyError(f"task id {result.task_id} missing from mapping")
    in_category = [r for r in results if mapping[r.task_id] is category]
    zero_ids = sorted(r.task_id for r in in_category if r.grid_acc == 0.0)
    n_tasks = len(in_category)
    fraction = Fraction(len(zero_ids), n_tasks) if n_tasks else None
    return CeilingReport(
        category=category,
        n_tasks=n_tasks,
        n_zero_grid=len(zero_ids),
        zero_fraction=fraction,
        exemplar_ids=tuple(zero_ids),
    )


@dataclass(frozen=True)
class CategoryFailureRate:
    n_failures: int
    n_tasks: int

    @property
    def rate(self) -> Fraction:
        return Fraction(self.n_failures, self.n_tasks)


@dataclass(frozen=True)
class FailureConcentration:
    """Where zero-grid failures land on the affinity scale."""

    failure_rule: str
    n_failures: int
    n_failures_low: int
    share: Fraction | None  # None when there are no failures at all
    per_category_failure_rates: dict[str, CategoryFailureRate]


def failure_concentration(
    results: Sequence[TaskResult],
    overrides: Mapping[Category, AffinityLevel] | None = None,
) -> FailureConcentration:
    """Share of zero-grid failures carried by Low/VeryLow affinity categories.

    Every record must carry a category. Ambiguous records count as failures
    but can never land in the low-affinity numerator.
    """
    if not results:
        raise ValueError("no results to analyze")
    for result in results:
        if result.category is None:
            raise ValueError(f"record {result.task_id} carries no category")
    failures = [r for r in results if r.grid_acc == 0.0]
    low_levels = (AffinityLevel.LOW, AffinityLevel.VERY_LOW)
    n_low = sum(
        1
        for r in failures
        if r.category is not Category.AMBIGUOUS
        and theoretical_affinity(r.category, overrides) in low_levels
    )
    per_category: dict[str, CategoryFailureRate] = {}
    for category in Category:
        in_cat = [r for r in results if r.category is category]
        if in_cat:
            n_failed = sum(1 for r in in_cat if r.grid_acc == 0.0)
            per_category[category.code] = CategoryFailureRate(n_failed, len(in_cat))
    share = Fraction(n_low, len(failures)) if failures else None
    return FailureConcentration(
        failure_rule="grid_acc == 0.0",
        n_failures=len(failures),
        n_failures_low=n_low,
        share=share,
        per_category_failure_rates=per_category,
    )


@dataclass(frozen=True)
class ConfidenceInterval:
    mean: float
    lower: float
    upper: float
    n: int
    confidence: float
    zero_width_warning: bool = False


def t_interval(values: Sequence[float], confidence: float = 0.95) -> ConfidenceInterval:
    """Two-sided t interval: mean +/- t(df=n-1) * sd / sqrt(n).

    A single observation yields a degenerate zero-width interval with a
    warning flag; the interval is reported raw, never clamped to [0, 1].
    """
    if not values:
        raise ValueError("no values to aggregate")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence out of range (0, 1): {confidence!r}")
    n = len(values)
    mean = _mean(values)
    if n == 1:
        return ConfidenceInterval(mean, mean, mean, n, confidence, zero_width_warning=True)
    sd = math.sqrt(_sample_variance(values))
    halfwidth = t_quantile(0.5 + confidence / 2.0, n - 1) * sd / math.sqrt(n)
    return ConfidenceInterval(mean, mean - halfwidth, mean + halfwidth, n, confidence)


def aggregate_seeds(
    groups: Mapping[str, Sequence[float]], confidence: float = 0.95
) -> dict[str, ConfidenceInterval]:
    """Per-group mean and confidence interval, keyed and ordered by label."""
    return {label: t_interval(values, confidence) for label, values in sorted(groups.items())}


def mean_results_by_task(results: Sequence[TaskResult]) -> list[TaskResult]:
    """Collapse multi-seed records to one record per task by metric means.

    The seed field is dropped; the category is preserved when the records
    agree and cleared when they conflict.
    """
    by_task: dict[str, list[TaskResult]] = {}
    for result in results:
        by_task.setdefault(result.task_id, []).append(result)
    collapsed = []
    for task_id, records in sorted(by_task.items()):
        bases = [r.base_cell_acc for r in records if r.base_cell_acc is not None]
        categories = {r.category for r in records if r.category is not None}
        collapsed.append(
            TaskResult(
                task_id=task_id,
                cell_acc=_mean([r.cell_acc for r in records]),
                grid_acc=_mean([r.grid_acc for r in records]),
                base_cell_acc=_mean(bases) if bases else None,
                category=categories.pop() if len(categories) == 1 else None,
            )
        )
    return collapsed


@dataclass(frozen=True)
class GroupComparison:
    group_a_label: str
    group_b_label: str
    n_a: int
    n_b: int
    mean_a: float
    mean_b: float
    sd_a: float
    sd_b: float
    t_p: float
    u_p: float
    cohens_d: float


def compare_groups(
    values_a: Sequence[float],
    values_b: Sequence[float],
    label_a: str = "a",
    label_b: str = "b",
) -> GroupComparison:
    """Welch t, Mann-Whitney, and Cohen's d for two value groups."""
    if len(values_a) < 2 or len(values_b) < 2:
        raise ValueError("each group needs at least 2 observations for the tests")
    t_result = welch_t(values_a, values_b)
    u_result = mann_whitney_u(values_a, values_b)
    try:
        d = cohens_d(values_a, values_b)
    except ValueError:
        # Both groups constant: equal means mean zero effect, unequal means
        # an unbounded standardized difference.
        if _mean(values_a) == _mean(values_b):
            d = 0.0
        else:
            d = math.copysign(math.inf, _mean(values_a) - _mean(values_b))
    return GroupComparison(
        group_a_label=label_a,
        group_b_label=label_b,
        n_a=len(values_a),
        n_b=len(values_b),
        mean_a=_mean(values_a),
        mean_b=_mean(values_b),
        sd_a=math.sqrt(_sample_variance(values_a)),
        sd_b=math.sqrt(_sample_variance(values_b)),
        t_p=t_result.p_value,
        u_p=u_result.p_value,
        cohens_d=d,
    )
