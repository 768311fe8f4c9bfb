"""Report bundles and deterministic serialization to JSON, CSV, and markdown.

Payloads are plain dicts with lexicographically sorted keys on emission, so
identical inputs always produce identical bytes. The bundle wrapper adds tool
version, input digests, and a timestamp; the timestamp is the only field
excluded from determinism guarantees.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from . import __version__
from .affinity import BiasReport, DistributionRow
from .diagnostics import (
    CeilingReport,
    ConfidenceInterval,
    FailureConcentration,
    GapReport,
    GroupComparison,
    SensitivityGrid,
)
from .display import fraction_payload, percent_string
from .rules import ClassificationTrace, ScoreReport

#: Reference values from the originating study, embedded behind a CLI flag
#: for side-by-side comparison in the dossier.
REFERENCE_VALUES = {
    "distribution_counts": {
        "S3": 108, "C1": 99, "S1": 52, "S2": 38, "A2": 28,
        "C2": 28, "L1": 21, "K1": 7, "A1": 5, "Ambiguous": 14,
    },
    "bias": "141/400 = 35.3%",
    "gap_at_operating_point": "210/302 = 69.5%",
    "sensitivity_majority_pairs": "43/66",
    "a2_zero_grid": "9/21 = 42.9%",
    "failure_concentration": "81/118 = 68.6%",
    "classifier_accuracy": "97.5% on classifiable tasks",
}


def sha256_of_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


@dataclass(frozen=True)
class ReportBundle:
    tool_version: str
    input_digests: dict[str, str]
    timestamp: str
    payload: dict


def make_bundle(payload: dict, inputs: Mapping[str, str | Path]) -> ReportBundle:
    """Wrap a payload with provenance: version, input hashes, timestamp."""
    digests = {role: sha256_of_file(path) for role, path in sorted(inputs.items())}
    return ReportBundle(
        tool_version=__version__,
        input_digests=digests,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        payload=payload,
    )


def payload_bytes(bundle: ReportBundle) -> bytes:
    """Canonical bytes of the payload alone (the determinism contract)."""
    return json.dumps(bundle.payload, sort_keys=True, indent=2).encode("utf-8") + b"\n"


def emit_json(bundle: ReportBundle) -> bytes:
    document = {
        "tool_version": bundle.tool_version,
        "input_digests": bundle.input_digests,
        "timestamp": bundle.timestamp,
        "payload": bundle.payload,
    }
    return json.dumps(document, sort_keys=True, indent=2).encode("utf-8") + b"\n"


# ---------------------------------------------------------------------------
# Payload builders (dataclass -> JSON-native dict)
# ---------------------------------------------------------------------------

def distribution_payload(rows: tuple[DistributionRow, ...]) -> dict:
    return {
        "kind": "distribution",
        "total": sum(row.count for row in rows),
        "rows": [
            {
                "category": row.category.code,
                "count": row.count,
                "fraction": fraction_payload(row.fraction),
                "percent": row.percent,
            }
            for row in rows
        ],
    }


def bias_payload(report: BiasReport) -> dict:
    return {
        "kind": "bias",
        "numerator": report.numerator,
        "denominator": report.denominator,
        "fraction": fraction_payload(report.fraction),
        "percent": report.percent,
        "summary": f"{report.numerator}/{report.denominator} = {report.percent}%",
    }


def traces_payload(traces: Mapping[str, ClassificationTrace]) -> dict:
    return {
        "kind": "classification",
        "n_units": len(traces),
        "traces": [
            {
                "task_id": trace.task_id,
                "category": trace.category.code,
                "fired_rule": trace.fired_rule,
                "edge_cases_applied": list(trace.edge_cases_applied),
                **({"error": trace.error} if trace.error else {}),
            }
            for _, trace in sorted(traces.items())
        ],
    }


def score_payload(report: ScoreReport) -> dict:
    accuracy = report.accuracy
    return {
        "kind": "score",
        "n_total": report.n_total,
        "n_classifiable": report.n_classifiable,
        "n_agree": report.n_agree,
        "accuracy": fraction_payload(accuracy),
        "accuracy_percent": percent_string(accuracy) if accuracy is not None else None,
        "confusion": {
            "labels": list(report.labels),
            "matrix": [list(row) for row in report.matrix],
        },
    }


def gap_payload(report: GapReport) -> dict:
    return {
        "kind": "gap",
        "thresholds": {
            "cell_min": report.thresholds.cell_min,
            "grid_max": report.thresholds.grid_max,
        },
        "n_total": report.n_total,
        "n_gap": report.n_gap,
        "fraction": fraction_payload(report.fraction),
        "percent": percent_string(report.fraction),
        "gap_task_ids": list(report.gap_task_ids),
        "summary": (
            f"{report.n_gap}/{report.n_total} = {percent_string(report.fraction)}%"
        ),
    }


def sensitivity_payload(grid: SensitivityGrid) -> dict:
    return {
        "kind": "sensitivity",
        "cell_axis": list(grid.cell_axis),
        "grid_axis": list(grid.grid_axis),
        "cells": [[float(value) for value in row] for row in grid.cells],
        "cells_exact": [
            [fraction_payload(value) for value in row] for row in grid.cells
        ],
        "majority_pairs": grid.majority_cells(),
        "total_pairs": grid.total_cells(),
    }


def ceiling_payload(report: CeilingReport) -> dict:
    percent = (
        percent_string(report.zero_fraction) if report.zero_fraction is not None else None
    )
    return {
        "kind": "ceilings",
        "category": report.category.code,
        "n_tasks": report.n_tasks,
        "n_zero_grid": report.n_zero_grid,
        "zero_fraction": fraction_payload(report.zero_fraction),
        "percent": percent,
        "exemplar_ids": list(report.exemplar_ids),
        "summary": (
            f"{report.n_zero_grid}/{report.n_tasks}"
            + (f" = {percent}%" if percent is not None else " (no tasks)")
        ),
    }


def failures_payload(report: FailureConcentration) -> dict:
    percent = percent_string(report.share) if report.share is not None else None
    return {
        "kind": "failures",
        "failure_rule": report.failure_rule,
        "n_failures": report.n_failures,
        "n_failures_low_affinity": report.n_failures_low,
        "share": fraction_payload(report.share),
        "percent": percent,
        "per_category_failure_rates": {
            code: {
                "n_failures": rate.n_failures,
                "n_tasks": rate.n_tasks,
                "rate": fraction_payload(rate.rate),
            }
            for code, rate in sorted(report.per_category_failure_rates.items())
        },
        "summary": (
            f"{report.n_failures_low}/{report.n_failures}"
            + (f" = {percent}%" if percent is not None else " (no failures)")
        ),
    }


def comparison_payload(comparison: GroupComparison) -> dict:
    return {
        "kind": "comparison",
        "group_a": {
            "label": comparison.group_a_label,
            "n": comparison.n_a,
            "mean": comparison.mean_a,
            "sd": comparison.sd_a,
        },
        "group_b": {
            "label": comparison.group_b_label,
            "n": comparison.n_b,
            "mean": comparison.mean_b,
            "sd": comparison.sd_b,
        },
        "welch_t_p": comparison.t_p,
        "mann_whitney_p": comparison.u_p,
        "cohens_d": comparison.cohens_d,
        "mean_gap_pp": round((comparison.mean_a - comparison.mean_b) * 100, 10),
    }


def interval_payload(ci: ConfidenceInterval) -> dict:
    return {
        "mean": ci.mean,
        "lower": ci.lower,
        "upper": ci.upper,
        "n": ci.n,
        "confidence": ci.confidence,
        "zero_width_warning": ci.zero_width_warning,
    }


# ---------------------------------------------------------------------------
# CSV emitters
# ---------------------------------------------------------------------------

def _csv_bytes(rows: list[list[str]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    return buffer.getvalue().encode("utf-8")


def distribution_csv(rows: tuple[DistributionRow, ...]) -> bytes:
    table = [["category", "count", "percent"]]
    for row in rows:
        table.append([row.category.code, str(row.count), row.percent])
    return _csv_bytes(table)


def confusion_csv(report: ScoreReport) -> bytes:
    table = [["truth\\predicted", *report.labels]]
    for label, row in zip(report.labels, report.matrix):
        table.append([label, *[str(v) for v in row]])
    return _csv_bytes(table)


def sensitivity_csv(grid: SensitivityGrid) -> bytes:
    """Matrix with grid thresholds across the top, cell thresholds down the side."""
    table = [["cell_min\\grid_max", *[f"{g:.2f}" for g in grid.grid_axis]]]
    for cell_min, row in zip(grid.cell_axis, grid.cells):
        table.append([f"{cell_min:.2f}", *[f"{float(v):.6f}" for v in row]])
    return _csv_bytes(table)


def emit_csv(payload: dict, extras: dict | None = None) -> bytes:
    """CSV view for the payload kinds that have a natural tabular form."""
    kind = payload.get("kind")
    if kind == "distribution":
        table = [["category", "count", "percent"]]
        for row in payload["rows"]:
            table.append([row["category"], str(row["count"]), row["percent"]])
        return _csv_bytes(table)
    if kind == "score":
        labels = payload["confusion"]["labels"]
        table = [["truth\\predicted", *labels]]
        for label, row in zip(labels, payload["confusion"]["matrix"]):
            table.append([label, *[str(v) for v in row]])
        return _csv_bytes(table)
    if kind == "sensitivity":
        table = [["cell_min\\grid_max", *[f"{g:.2f}" for g in payload["grid_axis"]]]]
        for cell_min, row in zip(payload["cell_axis"], payload["cells"]):
            table.append([f"{cell_min:.2f}", *[f"{v:.6f}" for v in row]])
        return _csv_bytes(table)
    raise ValueError(f"no CSV form for payload kind {kind!r}")


# ---------------------------------------------------------------------------
# Markdown
# ---------------------------------------------------------------------------

def md_table(header: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join([" --- "] * len(header)) + "|")
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return lines


def sensitivity_markdown(payload: dict) -> list[str]:
    header = ["cell_min \\ grid_max", *[f"{g:.2f}" for g in payload["grid_axis"]]]
    rows = [
        [f"{cell:.2f}", *[f"{v:.4f}" for v in row]]
        for cell, row in zip(payload["cell_axis"], payload["cells"])
    ]
    lines = md_table(header, rows)
    lines += ["", f"Majority pairs: {payload['majority_pairs']}/{payload['total_pairs']}"]
    return lines


def distribution_markdown(payload: dict, reference: bool = False) -> list[str]:
    header = ["Category", "Count", "Percent"]
    if reference:
        header.append("Reference count")
    rows = []
    for row in payload["rows"]:
        cells = [row["category"], str(row["count"]), row["percent"] + "%"]
        if reference:
            cells.append(str(REFERENCE_VALUES["distribution_counts"].get(row["category"], "")))
        rows.append(cells)
    return md_table(header, rows)


def emit_markdown(payload: dict, title: str, reference: bool = False) -> bytes:
    lines = [f"# {title}", ""]
    kind = payload.get("kind")
    if kind == "distribution":
        lines += distribution_markdown(payload, reference)
    elif kind == "sensitivity":
        lines += sensitivity_markdown(payload)
    elif kind == "score":
        lines.append(f"Accuracy on classifiable tasks: {payload['accuracy_percent']}%")
        lines.append("")
        labels = payload["confusion"]["labels"]
        rows = [
            [label, *[str(v) for v in row]]
            for label, row in zip(labels, payload["confusion"]["matrix"])
        ]
        lines += _md_table(["truth \\ predicted", *labels], rows)
    else:
        lines.append("```json")
        lines.append(json.dumps(payload, sort_keys=True, indent=2))
        lines.append("```")
    return ("\n".join(lines) + "\n").encode("utf-8")
