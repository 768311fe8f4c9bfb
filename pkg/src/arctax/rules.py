"""Priority-ordered classification rules over scan reports.

Rules are checked in fixed priority order and the first match wins. Primitive
evidence is taken from the transformation window; loop headers and asobject
ordering are taken from the whole body, so setup loops never masquerade as the
primary transformation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .model import CATEGORY_ORDER, Category, GeneratorUnit
from .scanner import (
    CONCAT_PRIMITIVES,
    MIRROR_PRIMITIVES,
    ROTATION_PRIMITIVES,
    InvalidUnitError,
    ScanReport,
    scan,
)

TOPOLOGICAL_PRIMITIVES = frozenset({"shoot", "connect", "frontiers", "neighbors", "box"})
SCALING_PRIMITIVES = frozenset({"upscale", "downscale", "crop"})
COLOR_ONLY_PRIMITIVES = frozenset({"colorfilter", "recolor", "palette"})
GEOMETRIC_TRANSFORMS = MIRROR_PRIMITIVES | ROTATION_PRIMITIVES

RULE_ORDER = ("1", "2", "3a", "3b", "4", "5", "6", "7", "8", "9")

_WHILE_LEN_RE = re.compile(r"\bwhile\s+len\s*\(")
_WHILE_FRONTIERS_RE = re.compile(r"\bwhile\s+frontiers\b")
_WHILE_SUCC_RE = re.compile(r"\bwhile\s+succ\s*<")
_RANGE_CALL_RE = re.compile(r"\brange\s*\(")

EDGE_ASOBJECT = "asobject-before-geometric"
EDGE_ITERATION_CONTEXT = "iteration-context-setup-loop"
EDGE_PRIORITY_OVERRIDE = "priority-override-topology-first"


@dataclass(frozen=True)
class RulesConfig:
    # The published rule set leaves subgrid() unhandled; enabling this makes
    # it count as a cropping primitive under the scaling rule.
    treat_subgrid_as_crop: bool = False

    def scaling_primitives(self) -> frozenset[str]:
        if self.treat_subgrid_as_crop:
            return SCALING_PRIMITIVES | {"subgrid"}
        return SCALING_PRIMITIVES


@dataclass(frozen=True)
class RuleEvidence:
    rule: str
    matched: bool
    witness_lines: tuple[int, ...]


@dataclass(frozen=True)
class ClassificationTrace:
    task_id: str
    category: Category
    fired_rule: str  # one of RULE_ORDER or "none"
    evidence: tuple[RuleEvidence, ...] = ()
    edge_cases_applied: tuple[str, ...] = ()
    error: str | None = None


def _go_lines_in_window(report: ScanReport) -> list[int]:
    window = report.window.indices()
    return [idx for idx in report.go_lines if idx in window]


def _window_hits_named(report: ScanReport, names: Iterable[str]) -> list[int]:
    names = frozenset(names)
    return sorted({h.line_index for h in report.window_hits() if h.name in names})


def _match_box_on_go_line(report: ScanReport, cfg: RulesConfig):
    lines = sorted(
        {h.line_index for h in report.window_hits() if h.name == "box" and h.in_go_assignment}
    )
    return bool(lines), tuple(lines)


def _match_pure_fill(report: ScanReport, cfg: RulesConfig):
    go_lines = _go_lines_in_window(report)
    if not go_lines:
        return False, ()
    calls_by_line: dict[int, set[str]] = {idx: set() for idx in go_lines}
    for hit in report.window_hits():
        if hit.line_index in calls_by_line:
            calls_by_line[hit.line_index].add(hit.name)
    if any(calls != {"fill"} for calls in calls_by_line.values()):
        return False, ()
    if _window_hits_named(report, TOPOLOGICAL_PRIMITIVES):
        return False, ()
    return True, tuple(go_lines)


def _match_convergence_loop(report: ScanReport, cfg: RulesConfig):
    lines = [
        idx
        for idx, text in report.while_headers
        if _WHILE_LEN_RE.search(text) or _WHILE_FRONTIERS_RE.search(text)
    ]
    return bool(lines), tuple(sorted(lines))


def _match_placement_loop(report: ScanReport, cfg: RulesConfig):
    header_lines = [idx for idx, text in report.while_headers if _WHILE_SUCC_RE.search(text)]
    issubset_lines = sorted({h.line_index for h in report.hits if h.name == "issubset"})
    if header_lines and issubset_lines:
        return True, tuple(sorted(header_lines) + issubset_lines)
    return False, ()


def _match_set_operations(report: ScanReport, cfg: RulesConfig):
    window = report.window.indices()
    lines = sorted(
        set(idx for idx in report.setop_lines if idx in window)
        | set(_window_hits_named(report, {"merge"}))
    )
    return bool(lines), tuple(lines)


def _match_topological(report: ScanReport, cfg: RulesConfig):
    lines = _window_hits_named(report, {"shoot", "connect", "frontiers", "neighbors"})
    return bool(lines), tuple(lines)


def _match_scaling(report: ScanReport, cfg: RulesConfig):
    lines = _window_hits_named(report, cfg.scaling_primitives())
    return bool(lines), tuple(lines)


def _match_geometric_composition(report: ScanReport, cfg: RulesConfig):
    concat_lines = _window_hits_named(report, CONCAT_PRIMITIVES)
    if concat_lines:
        return True, tuple(concat_lines)
    window = report.window.indices()
    range_headers = sorted(
        idx
        for idx, text in report.for_headers
        if idx in window and _RANGE_CALL_RE.search(text)
    )
    paint_lines = _window_hits_named(report, {"paint"})
    if range_headers and paint_lines:
        return True, tuple(range_headers + paint_lines)
    return False, ()


def _match_single_geometric(report: ScanReport, cfg: RulesConfig):
    lines = _window_hits_named(report, GEOMETRIC_TRANSFORMS)
    return bool(lines), tuple(lines)


def _match_color_only(report: ScanReport, cfg: RulesConfig):
    lines = _window_hits_named(report, COLOR_ONLY_PRIMITIVES)
    return bool(lines), tuple(lines)


# (rule id, matcher, category when fired). Rules 7 and 8 divert to C2 when
# asobject precedes the first geometric primitive in the body.
_RULES = (
    ("1", _match_box_on_go_line, Category.S3),
    ("2", _match_pure_fill, Category.C1),
    ("3a", _match_convergence_loop, Category.A1),
    ("3b", _match_placement_loop, Category.A2),
    ("4", _match_set_operations, Category.L1),
    ("5", _match_topological, Category.S3),
    ("6", _match_scaling, Category.K1),
    ("7", _match_geometric_composition, Category.S2),
    ("8", _match_single_geometric, Category.S1),
    ("9", _match_color_only, Category.C1),
)


def classify(report: ScanReport, task_id: str, config: RulesConfig | None = None) -> ClassificationTrace:
    """Apply the priority-ordered rules to one scan report."""
    cfg = config or RulesConfig()
    evidence: list[RuleEvidence] = []
    edge_cases: list[str] = []

    for rule_id, matcher, category in _RULES:
        matched, witnesses = matcher(report, cfg)
        evidence.append(RuleEvidence(rule=rule_id, matched=matched, witness_lines=witnesses))
        if not matched:
            continue
        if rule_id in ("7", "8") and report.has_asobject_before_geometric:
            category = Category.C2
            edge_cases.append(EDGE_ASOBJECT)
        if rule_id == "2" and report.while_headers:
            edge_cases.append(EDGE_ITERATION_CONTEXT)
        if rule_id == "1" and _match_placement_loop(report, cfg)[0]:
            edge_cases.append(EDGE_PRIORITY_OVERRIDE)
        return ClassificationTrace(
            task_id=task_id,
            category=category,
            fired_rule=rule_id,
            evidence=tuple(evidence),
            edge_cases_applied=tuple(edge_cases),
        )

    return ClassificationTrace(
        task_id=task_id,
        category=Category.AMBIGUOUS,
        fired_rule="none",
        evidence=tuple(evidence),
        edge_cases_applied=(),
    )


def classify_unit(unit: GeneratorUnit, config: RulesConfig | None = None) -> ClassificationTrace:
    """Scan and classify one unit; window failures degrade to Ambiguous."""
    try:
        report = scan(unit)
    except InvalidUnitError as exc:
        return ClassificationTrace(
            task_id=unit.task_id,
            category=Category.AMBIGUOUS,
            fired_rule="none",
            error=str(exc),
        )
    return classify(report, unit.task_id, config)


def classify_corpus(
    units: Iterable[GeneratorUnit], config: RulesConfig | None = None
) -> dict[str, ClassificationTrace]:
    """Classify every unit; output is keyed and ordered by task id."""
    traces = {unit.task_id: classify_unit(unit, config) for unit in units}
    return dict(sorted(traces.items()))


@dataclass(frozen=True)
class ScoreReport:
    """Agreement of predicted categories against a ground-truth mapping."""

    n_total: int
    n_classifiable: int
    n_agree: int
    accuracy: Fraction | None  # None when there are no classifiable tasks
    labels: tuple[str, ...] = field(default=tuple(c.code for c in CATEGORY_ORDER))
    matrix: tuple[tuple[int, ...], ...] = ()  # rows = truth, columns = predicted


def score_against_mapping(
    traces: Mapping[str, ClassificationTrace], truth: Mapping[str, Category]
) -> ScoreReport:
    """Score traces against ground truth; truth-Ambiguous tasks are excluded
    from the accuracy denominator but still appear in the confusion matrix."""
    index = {c: i for i, c in enumerate(CATEGORY_ORDER)}
    matrix = [[0] * len(CATEGORY_ORDER) for _ in CATEGORY_ORDER]
    n_classifiable = 0
    n_agree = 0
    for task_id, trace in sorted(traces.items()):
        if task_id not in truth:
            raise KeyError(f"task id {task_id} missing from ground-truth mapping")
        truth_cat = truth[task_id]
        matrix[index[truth_cat]][index[trace.category]] += 1
        if truth_cat is Category.AMBIGUOUS:
            continue
        n_classifiable += 1
        if trace.category is truth_cat:
            n_agree += 1
    accuracy = Fraction(n_agree, n_classifiable) if n_classifiable else None
    return ScoreReport(
        n_total=len(traces),
        n_classifiable=n_classifiable,
        n_agree=n_agree,
        accuracy=accuracy,
        matrix=tuple(tuple(row) for row in matrix),
    )
