"""Loaders for the three input corpora: generators, mappings, and results.

All readers are strict UTF-8 and validate every record; a bad record raises
:class:`~arctax.model.CorpusError` with file and position context rather than
being silently dropped.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Union

from .model import (
    Category,
    CorpusError,
    GeneratorUnit,
    SolveRateRecord,
    TaskResult,
    validate_task_id,
)

PathLike = Union[str, Path]

_DEF_RE = re.compile(r"^def\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(")
# Maximal runs of hex characters; only runs of exactly 8 qualify as task ids.
_HEX_RUN_RE = re.compile(r"[0-9a-f]+")


def _read_text(path: PathLike) -> str:
    p = Path(path)
    if not p.exists():
        raise CorpusError(f"{p}: file not found")
    try:
        return p.read_text(encoding="utf-8", errors="strict")
    except UnicodeDecodeError as exc:
        raise CorpusError(f"{p}: not valid UTF-8 ({exc})") from exc


def extract_task_id(function_name: str) -> str | None:
    """Return the first maximal 8-hex-char run in ``function_name``, if any."""
    for run in _HEX_RUN_RE.findall(function_name):
        if len(run) == 8:
            return run
    return None


@dataclass(frozen=True)
class CorpusLoad:
    """Result of parsing a generator file.

    ``len(units) + n_skipped == n_definitions`` always holds; every skipped
    definition contributes one entry to ``warnings``.
    """

    units: tuple[GeneratorUnit, ...]
    warnings: tuple[str, ...]
    n_definitions: int
    n_skipped: int


def load_generator_corpus(path: PathLike) -> CorpusLoad:
    """Parse a file of top-level function definitions into generator units.

    Function bodies are delimited by indentation: the body is the contiguous
    run of lines more indented than the ``def`` line (blank lines pass
    through, trailing blanks are trimmed). Bodies are captured verbatim.
    Multi-line ``def`` signatures are not supported; the corpus format is
    machine-generated single-line headers.
    """
    text = _read_text(path)
    lines = text.splitlines()
    units: list[GeneratorUnit] = []
    warnings: list[str] = []
    n_definitions = 0
    n_skipped = 0

    i = 0
    n = len(lines)
    while i < n:
        m = _DEF_RE.match(lines[i])
        if not m:
            i += 1
            continue
        n_definitions += 1
        name = m.group(1)
        body: list[str] = []
        i += 1
        while i < n:
            line = lines[i]
            if line.strip() and not line.startswith((" ", "\t")):
                break
            body.append(line)
            i += 1
        while body and not body[-1].strip():
            body.pop()
        task_id = extract_task_id(name)
        if task_id is None:
            n_skipped += 1
            warnings.append(f"{path}: function {name!r} has no 8-hex task id; skipped")
            continue
        if not body:
            n_skipped += 1
            warnings.append(f"{path}: function {name!r} has an empty body; skipped")
            continue
        units.append(GeneratorUnit(task_id=task_id, source_lines=tuple(body)))

    if n_definitions == 0:
        warnings.append(f"{path}: no function definitions found")
    return CorpusLoad(
        units=tuple(units),
        warnings=tuple(warnings),
        n_definitions=n_definitions,
        n_skipped=n_skipped,
    )


def load_mapping(path: PathLike) -> dict[str, Category]:
    """Load a JSON object of task id -> category code."""
    text = _read_text(path)

    def reject_duplicates(pairs):
        seen = set()
        out = {}
        for key, value in pairs:
            if key in seen:
                raise CorpusError(f"{path}: duplicate task id {key!r}")
            seen.add(key)
            out[key] = value
        return out

    try:
        raw = json.loads(text, object_pairs_hook=reject_duplicates)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise CorpusError(f"{path}: expected a JSON object of task id -> category")
    mapping: dict[str, Category] = {}
    for key, value in raw.items():
        try:
            task_id = validate_task_id(key)
            mapping[task_id] = Category.from_code(value)
        except CorpusError as exc:
            raise CorpusError(f"{path}: {exc}") from exc
    return mapping


def dump_mapping(mapping: dict[str, Category]) -> str:
    """Serialize a mapping back to its JSON file format (round-trip safe)."""
    plain = {
        tid: ("ambiguous" if cat is Category.AMBIGUOUS else cat.code)
        for tid, cat in sorted(mapping.items())
    }
    return json.dumps(plain, indent=0, sort_keys=True)


_REQUIRED_RESULT_KEYS = ("task_id", "cell_acc", "grid_acc")


def load_results(path: PathLike) -> list[TaskResult]:
    """Load a JSON array of per-task result records.

    Required keys: task_id, cell_acc, grid_acc. Optional: base_cell_acc,
    seed, category. Unknown keys (e.g. per-epoch series) are ignored.
    """
    text = _read_text(path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, list):
        raise CorpusError(f"{path}: expected a JSON array of result records")
    results: list[TaskResult] = []
    for idx, record in enumerate(raw):
        where = f"{path}: record {idx}"
        if not isinstance(record, dict):
            raise CorpusError(f"{where}: expected an object")
        for key in _REQUIRED_RESULT_KEYS:
            if key not in record:
                raise CorpusError(f"{where}: missing required key {key!r}")
        category = None
        if record.get("category") is not None:
            try:
                category = Category.from_code(record["category"])
            except CorpusError as exc:
                raise CorpusError(f"{where}: {exc}") from exc
        try:
            results.append(
                TaskResult(
                    task_id=record["task_id"],
                    cell_acc=record["cell_acc"],
                    grid_acc=record["grid_acc"],
                    base_cell_acc=record.get("base_cell_acc"),
                    seed=record.get("seed"),
                    category=category,
                )
            )
        except CorpusError as exc:
            raise CorpusError(f"{where}: {exc}") from exc
    return results


def load_solve_rates(path: PathLike) -> list[SolveRateRecord]:
    """Load a two-column CSV (task_id, solve_rate) with a header row."""
    text = _read_text(path)
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise CorpusError(f"{path}: empty file, expected a CSV header") from None
    if [h.strip() for h in header] != ["task_id", "solve_rate"]:
        raise CorpusError(f"{path}: expected header 'task_id,solve_rate', got {header!r}")
    records: list[SolveRateRecord] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise CorpusError(f"{path}: line {lineno}: expected 2 columns, got {len(row)}")
        task_id, rate_text = row[0].strip(), row[1].strip()
        try:
            rate = float(rate_text)
        except ValueError:
            raise CorpusError(f"{path}: line {lineno}: bad solve_rate {rate_text!r}") from None
        try:
            records.append(SolveRateRecord(task_id=task_id, solve_rate=rate))
        except CorpusError as exc:
            raise CorpusError(f"{path}: line {lineno}: {exc}") from exc
    return records


def bundled_mapping_path() -> Path:
    """Path to the packaged 400-task category mapping."""
    return Path(str(resources.files("arctax").joinpath("data/task_categories.json")))
