"""Command-line front door wiring ingestion, classification, and diagnostics."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import affinity as aff
from . import diagnostics as diag
from . import report as rep
from .ingest import (
    bundled_mapping_path,
    load_generator_corpus,
    load_mapping,
    load_results,
    load_solve_rates,
)
from .model import Category, CorpusError, TaskResult
from .rules import ClassificationTrace, RulesConfig, classify_corpus, score_against_mapping
from .stats import spearman


class CliError(Exception):
    """A user-facing error; message is printed and the exit code is nonzero."""


def _parse_axis(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise CliError(f"bad axis specification {text!r}; want comma-separated numbers") from None


def _parse_category(code: str) -> Category:
    try:
        return Category.from_code(code)
    except CorpusError as exc:
        raise CliError(str(exc)) from None


def _mapping_from_args(args) -> tuple[dict[str, Category], Path]:
    path = Path(args.mapping) if args.mapping else bundled_mapping_path()
    return load_mapping(path), path


def _overrides_from_args(args):
    if getattr(args, "affinity_overrides", None):
        return aff.load_affinity_overrides(args.affinity_overrides)
    return None


def _attach_categories(results, mapping):
    """Give every record a category, from the record itself or the mapping."""
    out = []
    for record in results:
        if record.category is not None:
            out.append(record)
            continue
        if mapping is None or record.task_id not in mapping:
            raise CliError(
                f"task {record.task_id} has no category; supply --mapping covering it"
            )
        out.append(
            TaskResult(
                task_id=record.task_id,
                cell_acc=record.cell_acc,
                grid_acc=record.grid_acc,
                base_cell_acc=record.base_cell_acc,
                seed=record.seed,
                category=mapping[record.task_id],
            )
        )
    return out


def _load_results_nonempty(path):
    results = load_results(path)
    if not results:
        raise CliError(f"{path}: no result records to analyze")
    return results


def _write_document(args, payload: dict, inputs: dict, title: str) -> None:
    bundle = rep.make_bundle(payload, inputs)
    if args.format == "json":
        data = rep.emit_json(bundle)
    elif args.format == "csv":
        data = rep.emit_csv(payload)
    else:
        data = rep.emit_markdown(payload, title)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_classify(args) -> int:
    load = load_generator_corpus(args.input)
    for warning in load.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    config = RulesConfig(treat_subgrid_as_crop=args.subgrid_as_crop)
    traces = classify_corpus(load.units, config)
    payload = rep.traces_payload(traces)
    n_ambiguous = sum(1 for t in traces.values() if t.category is Category.AMBIGUOUS)
    print(f"classified {len(traces)} units ({n_ambiguous} ambiguous)")
    _write_document(args, payload, {"generators": args.input}, "Classification traces")
    return 0


def _load_traces_file(path: str) -> dict[str, ClassificationTrace]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"{path}: cannot read traces ({exc})") from exc
    records = raw
    if isinstance(records, dict):
        records = records.get("payload", records)
    if isinstance(records, dict):
        records = records.get("traces")
    if not isinstance(records, list):
        raise CliError(f"{path}: expected a trace array or a classification document")
    traces = {}
    for record in records:
        trace = ClassificationTrace(
            task_id=record["task_id"],
            category=Category.from_code(record["category"]),
            fired_rule=record.get("fired_rule", "none"),
            edge_cases_applied=tuple(record.get("edge_cases_applied", ())),
        )
        traces[trace.task_id] = trace
    return traces


def _cmd_score(args) -> int:
    traces = _load_traces_file(args.input)
    mapping, mapping_path = _mapping_from_args(args)
    score = score_against_mapping(traces, mapping)
    payload = rep.score_payload(score)
    if score.accuracy is not None:
        print(
            f"{score.n_agree}/{score.n_classifiable} = "
            f"{payload['accuracy_percent']}% on classifiable tasks"
        )
    else:
        print("no classifiable tasks to score")
    confusion_out = args.confusion_out
    if confusion_out is None and args.out:
        confusion_out = str(Path(args.out).with_suffix(".confusion.csv"))
    if confusion_out:
        Path(confusion_out).parent.mkdir(parents=True, exist_ok=True)
        Path(confusion_out).write_bytes(rep.confusion_csv(score))
        print(f"confusion matrix written to {confusion_out}")
    _write_document(
        args, payload, {"traces": args.input, "mapping": mapping_path}, "Classifier agreement"
    )
    return 0


def _cmd_distribution(args) -> int:
    mapping, mapping_path = _mapping_from_args(args)
    rows = aff.distribution(mapping)
    payload = rep.distribution_payload(rows)
    summary = ", ".join(f"{r.category.code}={r.count} ({r.percent}%)" for r in rows)
    print(f"{len(mapping)} tasks: {summary}")
    _write_document(args, payload, {"mapping": mapping_path}, "Task category distribution")
    return 0


def _cmd_bias(args) -> int:
    mapping, mapping_path = _mapping_from_args(args)
    report = aff.curriculum_bias(mapping, _overrides_from_args(args))
    payload = rep.bias_payload(report)
    print(payload["summary"])
    _write_document(args, payload, {"mapping": mapping_path}, "Curriculum bias")
    return 0


def _cmd_gap(args) -> int:
    results = _load_results_nonempty(args.results)
    thresholds = diag.GapThresholds(cell_min=args.cell_min, grid_max=args.grid_max)
    report = diag.compositional_gap(diag.mean_results_by_task(results), thresholds)
    payload = rep.gap_payload(report)
    print(
        f"{payload['summary']} (cell > {thresholds.cell_min:g}, "
        f"grid < {thresholds.grid_max:g})"
    )
    _write_document(args, payload, {"results": args.results}, "Cell/grid dissociation")
    return 0


def _cmd_sensitivity(args) -> int:
    results = _load_results_nonempty(args.results)
    cell_axis = _parse_axis(args.cell_axis) if args.cell_axis else diag.DEFAULT_CELL_AXIS
    grid_axis = _parse_axis(args.grid_axis) if args.grid_axis else diag.DEFAULT_GRID_AXIS
    grid = diag.sensitivity(diag.mean_results_by_task(results), cell_axis, grid_axis)
    payload = rep.sensitivity_payload(grid)
    print(f"majority pairs: {grid.majority_cells()}/{grid.total_cells()}")
    _write_document(args, payload, {"results": args.results}, "Threshold sensitivity")
    return 0


def _cmd_ceilings(args) -> int:
    results = _load_results_nonempty(args.results)
    mapping, mapping_path = _mapping_from_args(args)
    category = _parse_category(args.category)
    report = diag.ceiling_report(diag.mean_results_by_task(results), mapping, category)
    payload = rep.ceiling_payload(report)
    print(f"{payload['summary']} at exactly 0.0 grid accuracy ({category.code})")
    _write_document(
        args, payload, {"results": args.results, "mapping": mapping_path}, "Affinity ceiling"
    )
    return 0


def _cmd_failures(args) -> int:
    results = _load_results_nonempty(args.results)
    mapping = None
    inputs = {"results": args.results}
    if args.mapping:
        mapping = load_mapping(args.mapping)
        inputs["mapping"] = args.mapping
    aggregated = diag.mean_results_by_task(_attach_categories(results, mapping))
    report = diag.failure_concentration(aggregated, _overrides_from_args(args))
    payload = rep.failures_payload(report)
    print(f"{payload['summary']} of failures in Low/VeryLow affinity categories")
    _write_document(args, payload, inputs, "Failure concentration")
    return 0


def _group_values(args, results, mapping):
    metric = args.metric
    if args.groups_file:
        try:
            labels = json.loads(Path(args.groups_file).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"{args.groups_file}: cannot read groups ({exc})") from exc
        member_of = lambda r: labels.get(r.task_id)
    else:
        if mapping is None:
            raise CliError("compare needs --mapping or --groups-file to form groups")
        member_of = lambda r: mapping.get(r.task_id).code if r.task_id in mapping else None

    def values_for(label: str) -> list[float]:
        out = [
            getattr(r, metric)
            for r in results
            if member_of(r) == label and getattr(r, metric) is not None
        ]
        if len(out) < 2:
            raise CliError(f"group {label!r} has {len(out)} usable records; need at least 2")
        return out

    return values_for(args.group_a), values_for(args.group_b)


def _cmd_compare(args) -> int:
    results = diag.mean_results_by_task(_load_results_nonempty(args.results))
    mapping = None
    inputs = {"results": args.results}
    if args.groups_file:
        inputs["groups"] = args.groups_file
    else:
        mapping, mapping_path = _mapping_from_args(args)
        inputs["mapping"] = mapping_path
    values_a, values_b = _group_values(args, results, mapping)
    comparison = diag.compare_groups(values_a, values_b, args.group_a, args.group_b)
    payload = rep.comparison_payload(comparison)
    print(
        f"{args.group_a} (n={comparison.n_a}, mean={comparison.mean_a:.4f}) vs "
        f"{args.group_b} (n={comparison.n_b}, mean={comparison.mean_b:.4f}): "
        f"welch p={comparison.t_p:.4f}, mann-whitney p={comparison.u_p:.4f}, "
        f"d={comparison.cohens_d:.3f}"
    )
    _write_document(args, payload, inputs, "Group comparison")
    return 0


def _external_payload(records, mapping, overrides):
    joined = []
    n_ambiguous = 0
    for record in records:
        if record.task_id not in mapping:
            raise CliError(f"task {record.task_id} missing from mapping")
        category = mapping[record.task_id]
        if category is Category.AMBIGUOUS:
            n_ambiguous += 1
            continue
        level = aff.theoretical_affinity(category, overrides)
        joined.append((record.task_id, record.solve_rate, level))

    by_level: dict[aff.AffinityLevel, list[float]] = {}
    for _, rate, level in joined:
        by_level.setdefault(level, []).append(rate)
    level_rows = []
    for level in sorted(by_level):
        values = by_level[level]
        level_rows.append(
            {
                "level": level.label,
                "n": len(values),
                "mean": sum(values) / len(values),
            }
        )

    payload = {
        "kind": "external-validation",
        "n_rated": len(joined),
        "n_ambiguous_excluded": n_ambiguous,
        "levels": level_rows,
    }
    if len(joined) >= 3:
        corr = spearman(
            [float(level) for _, _, level in joined], [rate for _, rate, _ in joined]
        )
        payload["affinity_rank_correlation"] = {
            "rho": corr.statistic,
            "p": corr.p_value,
            "n": corr.n_a,
        }
    high = by_level.get(aff.AffinityLevel.HIGH, [])
    very_low = by_level.get(aff.AffinityLevel.VERY_LOW, [])
    if len(high) >= 2 and len(very_low) >= 2:
        comparison = diag.compare_groups(high, very_low, "High", "VeryLow")
        payload["high_vs_very_low"] = rep.comparison_payload(comparison)
    return payload


def _cmd_external_validate(args) -> int:
    records = load_solve_rates(args.solve_rates)
    mapping, mapping_path = _mapping_from_args(args)
    payload = _external_payload(records, mapping, _overrides_from_args(args))
    means = {row["level"]: row["mean"] for row in payload["levels"]}
    if "high_vs_very_low" in payload:
        gap_pp = payload["high_vs_very_low"]["mean_gap_pp"]
        comparison = payload["high_vs_very_low"]
        print(
            f"VeryLow mean {means['VeryLow']:.3f} vs High mean {means['High']:.3f}: "
            f"{gap_pp:.1f}pp gap (mann-whitney p={comparison['mann_whitney_p']:.4f}, "
            f"d={comparison['cohens_d']:.3f})"
        )
    else:
        print(
            "level means: "
            + ", ".join(f"{row['level']}={row['mean']:.3f}" for row in payload["levels"])
        )
    _write_document(
        args,
        payload,
        {"solve_rates": args.solve_rates, "mapping": mapping_path},
        "External validation",
    )
    return 0


# ---------------------------------------------------------------------------
# The full dossier
# ---------------------------------------------------------------------------

def _cmd_report(args) -> int:
    if not args.out:
        raise CliError("report requires --out DIRECTORY")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    inputs: dict[str, str | Path] = {}
    sections: dict[str, dict] = {}
    lines: list[str] = ["# Diagnostics dossier", ""]
    reference = args.reference_values

    mapping = None
    if args.mapping or not args.no_default_mapping:
        mapping, mapping_path = _mapping_from_args(args)
        inputs["mapping"] = mapping_path

    if mapping:
        dist_rows = aff.distribution(mapping)
        sections["distribution"] = rep.distribution_payload(dist_rows)
        lines += ["## Task category distribution", ""]
        lines += rep.distribution_markdown(sections["distribution"], reference)
        lines.append("")
        bias = aff.curriculum_bias(mapping, _overrides_from_args(args))
        sections["bias"] = rep.bias_payload(bias)
        lines += ["## Curriculum bias", "", f"Low/VeryLow share: {sections['bias']['summary']}"]
        if reference:
            lines.append(f"Reference: {rep.REFERENCE_VALUES['bias']}")
        lines.append("")

    if args.input:
        inputs["generators"] = args.input
        load = load_generator_corpus(args.input)
        config = RulesConfig(treat_subgrid_as_crop=args.subgrid_as_crop)
        traces = classify_corpus(load.units, config)
        sections["classification"] = rep.traces_payload(traces)
        lines += ["## Classifier run", "", f"Units classified: {len(traces)}"]
        scoreable = {tid: tr for tid, tr in traces.items() if mapping and tid in mapping}
        if scoreable:
            score = score_against_mapping(scoreable, mapping)
            sections["score"] = rep.score_payload(score)
            accuracy = sections["score"]["accuracy_percent"]
            lines.append(
                f"Agreement: {score.n_agree}/{score.n_classifiable}"
                + (f" = {accuracy}%" if accuracy is not None else "")
            )
            if reference:
                lines.append(f"Reference: {rep.REFERENCE_VALUES['classifier_accuracy']}")
        elif mapping:
            lines.append("Agreement: no classified task ids overlap the mapping; skipped.")
        lines.append("")

    if args.results:
        inputs["results"] = args.results
        results = load_results(args.results)
        aggregated = diag.mean_results_by_task(results)
        thresholds = diag.GapThresholds(cell_min=args.cell_min, grid_max=args.grid_max)
        gap = diag.compositional_gap(aggregated, thresholds)
        sections["gap"] = rep.gap_payload(gap)
        lines += [
            "## Cell/grid dissociation",
            "",
            f"Tasks above {thresholds.cell_min:g} cell and below "
            f"{thresholds.grid_max:g} grid accuracy: {sections['gap']['summary']}",
        ]
        if reference:
            lines.append(f"Reference: {rep.REFERENCE_VALUES['gap_at_operating_point']}")
        lines.append("")
        grid = diag.sensitivity(aggregated)
        sections["sensitivity"] = rep.sensitivity_payload(grid)
        lines += ["## Threshold sensitivity", ""]
        lines += rep.sensitivity_markdown(sections["sensitivity"])
        if reference:
            lines.append(
                f"Reference majority pairs: {rep.REFERENCE_VALUES['sensitivity_majority_pairs']}"
            )
        lines.append("")

        if mapping:
            covered = [
                r
                for r in aggregated
                if r.task_id in mapping or r.category is not None
            ]
            n_uncovered = len(aggregated) - len(covered)
            if covered:
                with_categories = _attach_categories(covered, mapping)
                lines += ["## Zero-grid ceilings by category", ""]
                covered_mapping = {r.task_id: r.category for r in with_categories}
                ceiling_rows = []
                ceilings = {}
                for category in Category:
                    if category is Category.AMBIGUOUS:
                        continue
                    ceiling = diag.ceiling_report(with_categories, covered_mapping, category)
                    if ceiling.n_tasks == 0:
                        continue
                    ceilings[category.code] = rep.ceiling_payload(ceiling)
                    ceiling_rows.append(
                        [category.code, str(ceiling.n_tasks), str(ceiling.n_zero_grid),
                         ceilings[category.code]["percent"] or "-"]
                    )
                sections["ceilings"] = {"kind": "ceilings-by-category", "categories": ceilings}
                lines += rep.md_table(
                    ["Category", "Tasks", "Zero-grid", "Percent"], ceiling_rows
                )
                if n_uncovered:
                    lines.append(f"({n_uncovered} result tasks absent from the mapping; skipped)")
                lines.append("")

                failures = diag.failure_concentration(
                    with_categories, _overrides_from_args(args)
                )
                sections["failures"] = rep.failures_payload(failures)
                lines += [
                    "## Failure concentration",
                    "",
                    f"Zero-grid failures in Low/VeryLow affinity: "
                    f"{sections['failures']['summary']}",
                ]
                if reference:
                    lines.append(
                        f"Reference: {rep.REFERENCE_VALUES['failure_concentration']}"
                    )
                lines.append("")

    if args.solve_rates:
        inputs["solve_rates"] = args.solve_rates
        if not mapping:
            raise CliError("external validation needs a mapping")
        records = load_solve_rates(args.solve_rates)
        sections["external"] = _external_payload(records, mapping, _overrides_from_args(args))
        lines += ["## External validation", ""]
        for row in sections["external"]["levels"]:
            lines.append(f"- {row['level']}: n={row['n']}, mean solve rate {row['mean']:.3f}")
        if "high_vs_very_low" in sections["external"]:
            hvl = sections["external"]["high_vs_very_low"]
            lines.append(
                f"- High vs VeryLow: {hvl['mean_gap_pp']:.1f}pp, "
                f"mann-whitney p={hvl['mann_whitney_p']:.4f}, d={hvl['cohens_d']:.3f}"
            )
        lines.append("")

    if not sections:
        raise CliError("report needs at least one input (--mapping/--input/--results/--solve-rates)")

    bundle = rep.make_bundle({"kind": "dossier", "sections": sections}, inputs)
    (outdir / "dossier.md").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (outdir / "bundle.json").write_bytes(rep.emit_json(bundle))
    print(f"wrote {outdir / 'dossier.md'} and {outdir / 'bundle.json'}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arctax",
        description="Taxonomy classification and diagnostics for generator corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--format", choices=("json", "csv", "markdown"), default="json")
        p.add_argument("--out", help="write the document here instead of stdout")

    p = sub.add_parser("classify", help="classify a generator source file")
    p.add_argument("--input", required=True, help="generator source file")
    p.add_argument("--subgrid-as-crop", action="store_true",
                   help="treat subgrid() as a cropping primitive (off in the published rules)")
    add_common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("score", help="score classification traces against a mapping")
    p.add_argument("--input", required=True, help="trace JSON from classify")
    p.add_argument("--mapping", help="mapping JSON (default: bundled)")
    p.add_argument("--confusion-out", help="write the confusion matrix CSV here")
    add_common(p)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("distribution", help="per-category counts and percentages")
    p.add_argument("--mapping", help="mapping JSON (default: bundled)")
    add_common(p)
    p.set_defaults(func=_cmd_distribution)

    p = sub.add_parser("bias", help="share of Low/VeryLow affinity tasks")
    p.add_argument("--mapping", help="mapping JSON (default: bundled)")
    p.add_argument("--affinity-overrides", help="JSON of category -> affinity level")
    add_common(p)
    p.set_defaults(func=_cmd_bias)

    p = sub.add_parser("gap", help="cell/grid dissociation tally")
    p.add_argument("--results", required=True, help="results JSON")
    p.add_argument("--cell-min", type=float, default=0.80)
    p.add_argument("--grid-max", type=float, default=0.10)
    add_common(p)
    p.set_defaults(func=_cmd_gap)

    p = sub.add_parser("sensitivity", help="gap fraction over a threshold grid")
    p.add_argument("--results", required=True)
    p.add_argument("--cell-axis", help="comma-separated cell thresholds")
    p.add_argument("--grid-axis", help="comma-separated grid thresholds")
    add_common(p)
    p.set_defaults(func=_cmd_sensitivity)

    p = sub.add_parser("ceilings", help="zero-grid ceiling stats for one category")
    p.add_argument("--results", required=True)
    p.add_argument("--mapping", help="mapping JSON (default: bundled)")
    p.add_argument("--category", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_ceilings)

    p = sub.add_parser("failures", help="failure concentration by affinity")
    p.add_argument("--results", required=True)
    p.add_argument("--mapping", help="mapping JSON for records without categories")
    p.add_argument("--affinity-overrides")
    add_common(p)
    p.set_defaults(func=_cmd_failures)

    p = sub.add_parser("compare", help="two-group statistical comparison")
    p.add_argument("--results", required=True)
    p.add_argument("--mapping", help="mapping JSON to group by category")
    p.add_argument("--groups-file", help="JSON of task id -> group label")
    p.add_argument("--group-a", required=True)
    p.add_argument("--group-b", required=True)
    p.add_argument("--metric", choices=("grid_acc", "cell_acc"), default="grid_acc")
    add_common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("external-validate", help="affinity-level solve-rate analysis")
    p.add_argument("--solve-rates", required=True, help="CSV of task_id,solve_rate")
    p.add_argument("--mapping", help="mapping JSON (default: bundled)")
    p.add_argument("--affinity-overrides")
    add_common(p)
    p.set_defaults(func=_cmd_external_validate)

    p = sub.add_parser("report", help="run all applicable analyses into one dossier")
    p.add_argument("--mapping", help="mapping JSON (default: bundled)")
    p.add_argument("--no-default-mapping", action="store_true",
                   help="do not fall back to the bundled mapping")
    p.add_argument("--input", help="generator source file")
    p.add_argument("--results", help="results JSON")
    p.add_argument("--solve-rates", help="solve-rate CSV")
    p.add_argument("--affinity-overrides")
    p.add_argument("--subgrid-as-crop", action="store_true")
    p.add_argument("--cell-min", type=float, default=0.80)
    p.add_argument("--grid-max", type=float, default=0.10)
    p.add_argument("--reference-values", action="store_true",
                   help="embed published reference values for side-by-side checks")
    add_common(p)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, CorpusError, ValueError, KeyError, OSError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
