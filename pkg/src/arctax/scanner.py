"""Static scan of generator bodies: transformation window and primitive usage.

The scan is purely lexical. String literals and comments are stripped before
tokenization so that primitive names inside them never produce hits; there is
deliberately no grammar, scoping, or dataflow here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import GeneratorUnit

#: Retained lines kept ahead of the first top-level return.
WINDOW_SIZE = 15

#: Geometric primitives considered by the asobject-ordering edge case.
MIRROR_PRIMITIVES = frozenset({"hmirror", "vmirror", "dmirror", "cmirror", "mirror"})
ROTATION_PRIMITIVES = frozenset({"rot90", "rot180", "rot270", "transpose"})
CONCAT_PRIMITIVES = frozenset({"hconcat", "vconcat"})
GEOMETRIC_PRIMITIVES = MIRROR_PRIMITIVES | ROTATION_PRIMITIVES | CONCAT_PRIMITIVES

#: Set-context markers for infix &, |, - to count as set operators.
SET_CONTEXT_CALLS = frozenset({"intersection", "union", "difference", "merge"})

# Identifier directly followed by an open paren; attribute calls like
# obj.fill( match at the attribute name.
_CALL_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\(")
# Assignment whose target token sequence is exactly "go" "=" (not "==").
_GO_ASSIGN_RE = re.compile(r"^go\s*=(?!=)")
_WHILE_RE = re.compile(r"^while\b")
_FOR_RE = re.compile(r"^for\b")
_RETURN_RE = re.compile(r"^return\b")
# A minus is binary when preceded by something that can end an operand.
_BINARY_MINUS_RE = re.compile(r"[\w\)\]\}]\s*-")


class InvalidUnitError(ValueError):
    """The unit has no top-level return, so no window can be extracted."""


@dataclass(frozen=True)
class TransformationWindow:
    """The last retained lines before the first top-level return.

    Each entry is (line_index, text) where line_index is the position in the
    original body and text is the verbatim source line.
    """

    lines: tuple[tuple[int, str], ...]

    def indices(self) -> frozenset[int]:
        return frozenset(idx for idx, _ in self.lines)


@dataclass(frozen=True)
class PrimitiveHit:
    name: str
    line_index: int
    in_window: bool
    in_go_assignment: bool


@dataclass(frozen=True)
class ScanReport:
    window: TransformationWindow
    hits: tuple[PrimitiveHit, ...]
    go_lines: tuple[int, ...]
    while_headers: tuple[tuple[int, str], ...]
    for_headers: tuple[tuple[int, str], ...]
    setop_lines: tuple[int, ...]
    has_asobject_before_geometric: bool

    def window_hits(self) -> tuple[PrimitiveHit, ...]:
        return tuple(h for h in self.hits if h.in_window)


def strip_strings_and_comments(line: str) -> str:
    """Blank out single-line string literals and drop trailing comments.

    Quote characters and their contents are replaced by spaces so that
    column positions of the surviving code are preserved. Strings spanning
    multiple physical lines are out of scope for this corpus format.
    """
    out: list[str] = []
    quote: str | None = None
    escaped = False
    for ch in line:
        if quote is not None:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            out.append(" ")
            continue
        if ch in ("'", '"'):
            quote = ch
            out.append(" ")
            continue
        if ch == "#":
            break
        out.append(ch)
    return "".join(out)


def _indent_width(line: str) -> int:
    return len(line) - len(line.lstrip(" \t"))


def _retained_lines(unit: GeneratorUnit) -> list[tuple[int, str, str]]:
    """(index, original, code) triples for non-blank, non-comment-only lines."""
    retained = []
    for idx, original in enumerate(unit.source_lines):
        code = strip_strings_and_comments(original)
        if code.strip():
            retained.append((idx, original, code))
    return retained


def _first_top_level_return(retained: list[tuple[int, str, str]]) -> int:
    """Position within ``retained`` of the first outermost-level return."""
    if not retained:
        raise InvalidUnitError("generator body has no retained lines")
    base_indent = min(_indent_width(code) for _, _, code in retained)
    for pos, (_, _, code) in enumerate(retained):
        if _indent_width(code) == base_indent and _RETURN_RE.match(code.strip()):
            return pos
    raise InvalidUnitError("generator body has no top-level return statement")


def extract_window(unit: GeneratorUnit) -> TransformationWindow:
    """Return the up-to-15 retained lines preceding the first top-level return."""
    retained = _retained_lines(unit)
    return_pos = _first_top_level_return(retained)
    start = max(0, return_pos - WINDOW_SIZE)
    return TransformationWindow(
        lines=tuple((idx, original) for idx, original, _ in retained[start:return_pos])
    )


def scan(unit: GeneratorUnit) -> ScanReport:
    """Scan a generator body for the evidence the classification rules use."""
    retained = _retained_lines(unit)
    window = extract_window(unit)
    window_indices = window.indices()

    hits: list[PrimitiveHit] = []
    go_lines: list[int] = []
    while_headers: list[tuple[int, str]] = []
    for_headers: list[tuple[int, str]] = []
    setop_lines: list[int] = []
    first_asobject: int | None = None
    first_geometric: int | None = None

    for idx, original, code in retained:
        stripped = code.strip()
        is_go = bool(_GO_ASSIGN_RE.match(stripped))
        if is_go:
            go_lines.append(idx)
        if _WHILE_RE.match(stripped):
            while_headers.append((idx, original.strip()))
        if _FOR_RE.match(stripped):
            for_headers.append((idx, original.strip()))

        names_on_line = []
        for match in _CALL_RE.finditer(code):
            name = match.group(1)
            names_on_line.append(name)
            hits.append(
                PrimitiveHit(
                    name=name,
                    line_index=idx,
                    in_window=idx in window_indices,
                    in_go_assignment=is_go,
                )
            )
            if name == "asobject" and first_asobject is None:
                first_asobject = idx
            if name in GEOMETRIC_PRIMITIVES and first_geometric is None:
                first_geometric = idx

        has_infix = "&" in code or "|" in code or _BINARY_MINUS_RE.search(code)
        in_set_context = "set(" in code or any(n in SET_CONTEXT_CALLS for n in names_on_line)
        if has_infix and in_set_context:
            setop_lines.append(idx)

    ordering = (
        first_asobject is not None
        and first_geometric is not None
        and first_asobject < first_geometric
    )
    return ScanReport(
        window=window,
        hits=tuple(hits),
        go_lines=tuple(go_lines),
        while_headers=tuple(while_headers),
        for_headers=tuple(for_headers),
        setop_lines=tuple(setop_lines),
        has_asobject_before_geometric=ordering,
    )
