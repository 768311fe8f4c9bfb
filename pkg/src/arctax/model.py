"""Shared domain model: task identifiers, categories, and record types."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

TASK_ID_RE = re.compile(r"^[0-9a-f]{8}$")


class CorpusError(ValueError):
    """An input file violates its documented format."""


def validate_task_id(value: str) -> str:
    """Return ``value`` if it is exactly 8 lowercase hex characters, else raise."""
    if not isinstance(value, str) or not TASK_ID_RE.match(value):
        raise CorpusError(f"malformed task id: {value!r} (want 8 lowercase hex chars)")
    return value


class Category(Enum):
    """The nine taxonomy codes plus the Ambiguous bucket."""

    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    C1 = "C1"
    C2 = "C2"
    K1 = "K1"
    L1 = "L1"
    A1 = "A1"
    A2 = "A2"
    AMBIGUOUS = "Ambiguous"

    @classmethod
    def from_code(cls, code: str) -> "Category":
        """Parse a category code; 'ambiguous' is accepted in either case."""
        if code in _CODE_TO_CATEGORY:
            return _CODE_TO_CATEGORY[code]
        if isinstance(code, str) and code.lower() == "ambiguous":
            return cls.AMBIGUOUS
        raise CorpusError(f"unknown category code: {code!r}")

    @property
    def code(self) -> str:
        return self.value


_CODE_TO_CATEGORY = {c.value: c for c in Category}

#: All ten values in declaration order (confusion-matrix axis order).
CATEGORY_ORDER = tuple(Category)

#: The nine real categories, excluding Ambiguous.
REAL_CATEGORIES = tuple(c for c in Category if c is not Category.AMBIGUOUS)


def _check_fraction(name: str, value: float) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise CorpusError(f"{name} must be a number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise CorpusError(f"{name} out of range [0, 1]: {value!r}")
    return float(value)


@dataclass(frozen=True)
class GeneratorUnit:
    """One task's generator: its id plus the verbatim body of the function."""

    task_id: str
    source_lines: tuple[str, ...]

    def __post_init__(self) -> None:
        validate_task_id(self.task_id)
        if not self.source_lines:
            raise CorpusError(f"{self.task_id}: generator body is empty")

    def has_return(self) -> bool:
        """True if any line opens with a ``return`` statement (any nesting)."""
        return any(line.lstrip().startswith("return") for line in self.source_lines)


@dataclass(frozen=True)
class TaskResult:
    """Per-task experiment record with cell- and grid-level accuracies."""

    task_id: str
    cell_acc: float
    grid_acc: float
    base_cell_acc: Optional[float] = None
    seed: Optional[int] = None
    category: Optional[Category] = None

    def __post_init__(self) -> None:
        validate_task_id(self.task_id)
        _check_fraction("cell_acc", self.cell_acc)
        _check_fraction("grid_acc", self.grid_acc)
        if self.base_cell_acc is not None:
            _check_fraction("base_cell_acc", self.base_cell_acc)
        if self.seed is not None:
            if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
                raise CorpusError(f"seed must be a non-negative integer: {self.seed!r}")


@dataclass(frozen=True)
class SolveRateRecord:
    """External per-task solve rate, e.g. from a specialist-model study."""

    task_id: str
    solve_rate: float

    def __post_init__(self) -> None:
        validate_task_id(self.task_id)
        _check_fraction("solve_rate", self.solve_rate)
