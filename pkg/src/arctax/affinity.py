"""Architectural-suitability ratings and curriculum composition analytics.

Two distinct notions live here: a fixed category-level rating of how well a
standard transformer suits each task family, and a task-level band derived
from observed base cell accuracy. They are kept separate on purpose.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from .display import HALF_EVEN, HALF_UP, percent_string
from .model import Category, CorpusError


class AffinityLevel(IntEnum):
    """Suitability rating, totally ordered from worst to best."""

    VERY_LOW = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def label(self) -> str:
        return _LEVEL_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "AffinityLevel":
        try:
            return _LABEL_TO_LEVEL[label]
        except KeyError:
            raise CorpusError(
                f"unknown affinity level {label!r} (want one of {sorted(_LABEL_TO_LEVEL)})"
            ) from None


_LEVEL_LABELS = {
    AffinityLevel.VERY_LOW: "VeryLow",
    AffinityLevel.LOW: "Low",
    AffinityLevel.MEDIUM: "Medium",
    AffinityLevel.HIGH: "High",
}
_LABEL_TO_LEVEL = {label: level for level, label in _LEVEL_LABELS.items()}

#: Category-level ratings. Ambiguous has no rating.
THEORETICAL_AFFINITY: dict[Category, AffinityLevel] = {
    Category.C1: AffinityLevel.HIGH,
    Category.S1: AffinityLevel.MEDIUM,
    Category.S2: AffinityLevel.MEDIUM,
    Category.C2: AffinityLevel.MEDIUM,
    Category.K1: AffinityLevel.MEDIUM,
    Category.L1: AffinityLevel.MEDIUM,
    Category.S3: AffinityLevel.LOW,
    Category.A1: AffinityLevel.LOW,
    Category.A2: AffinityLevel.VERY_LOW,
}

#: Band boundaries for observed base cell accuracy; both edges sit in Medium.
EMPIRICAL_LOW_MAX = 0.70
EMPIRICAL_HIGH_MIN = 0.85


def theoretical_affinity(
    category: Category, overrides: Mapping[Category, AffinityLevel] | None = None
) -> AffinityLevel:
    """Rating for one of the nine real categories; Ambiguous is undefined."""
    if category is Category.AMBIGUOUS:
        raise ValueError("Ambiguous tasks carry no affinity rating")
    if overrides and category in overrides:
        return overrides[category]
    return THEORETICAL_AFFINITY[category]


def load_affinity_overrides(path: str | Path) -> dict[Category, AffinityLevel]:
    """Read a JSON object of category code -> affinity label."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorpusError(f"{path}: cannot read affinity overrides ({exc})") from exc
    if not isinstance(raw, dict):
        raise CorpusError(f"{path}: expected a JSON object of category -> level")
    overrides: dict[Category, AffinityLevel] = {}
    for code, label in raw.items():
        category = Category.from_code(code)
        if category is Category.AMBIGUOUS:
            raise CorpusError(f"{path}: Ambiguous cannot carry an affinity rating")
        overrides[category] = AffinityLevel.from_label(label)
    return overrides


@dataclass(frozen=True)
class EmpiricalAffinity:
    band: AffinityLevel
    source_value: float


def empirical_band(base_cell_acc: float) -> EmpiricalAffinity:
    """Band a base cell accuracy: Low < 0.70 <= Medium <= 0.85 < High."""
    if not 0.0 <= base_cell_acc <= 1.0:
        raise ValueError(f"base cell accuracy out of range [0, 1]: {base_cell_acc!r}")
    if base_cell_acc < EMPIRICAL_LOW_MAX:
        band = AffinityLevel.LOW
    elif base_cell_acc <= EMPIRICAL_HIGH_MIN:
        band = AffinityLevel.MEDIUM
    else:
        band = AffinityLevel.HIGH
    return EmpiricalAffinity(band=band, source_value=base_cell_acc)


@dataclass(frozen=True)
class BiasReport:
    """Share of a mapping that falls in Low or VeryLow affinity categories."""

    numerator: int
    denominator: int
    fraction: Fraction
    percent: str


def curriculum_bias(
    mapping: Mapping[str, Category],
    overrides: Mapping[Category, AffinityLevel] | None = None,
) -> BiasReport:
    """Count tasks whose category rates Low or VeryLow, over all tasks.

    Ambiguous tasks count in the denominator (the bias is a share of the
    whole curriculum) but can never enter the numerator.
    """
    if not mapping:
        raise ValueError("mapping is empty")
    low_like = {
        c
        for c in THEORETICAL_AFFINITY
        if theoretical_affinity(c, overrides) <= AffinityLevel.LOW
    }
    numerator = sum(1 for cat in mapping.values() if cat in low_like)
    denominator = len(mapping)
    fraction = Fraction(numerator, denominator)
    return BiasReport(
        numerator=numerator,
        denominator=denominator,
        fraction=fraction,
        percent=percent_string(fraction, rounding=HALF_UP),
    )


@dataclass(frozen=True)
class DistributionRow:
    category: Category
    count: int
    fraction: Fraction
    percent: str


def distribution(mapping: Mapping[str, Category]) -> tuple[DistributionRow, ...]:
    """Per-category counts and display percentages.

    Real categories are ordered by descending count (ties by code) with
    Ambiguous always last. Percentages use banker's rounding, which matches
    the published distribution table at every midpoint.
    """
    if not mapping:
        raise ValueError("mapping is empty")
    total = len(mapping)
    counts = {category: 0 for category in Category}
    for category in mapping.values():
        counts[category] += 1
    real = [c for c in Category if c is not Category.AMBIGUOUS]
    ordered = sorted(real, key=lambda c: (-counts[c], c.code)) + [Category.AMBIGUOUS]
    rows = []
    for category in ordered:
        fraction = Fraction(counts[category], total)
        rows.append(
            DistributionRow(
                category=category,
                count=counts[category],
                fraction=fraction,
                percent=percent_string(fraction, rounding=HALF_EVEN),
            )
        )
    return tuple(rows)
