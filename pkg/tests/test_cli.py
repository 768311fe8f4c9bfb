import json

import pytest

from arctax.cli import main
from .conftest import FIXTURES


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_results(tmp_path, records, name="results.json"):
    path = tmp_path / name
    path.write_text(json.dumps(records), encoding="utf-8")
    return str(path)


SMALL_RESULTS = [
    {"task_id": "00000001", "cell_acc": 0.95, "grid_acc": 0.0},
    {"task_id": "00000002", "cell_acc": 0.5, "grid_acc": 0.0},
    {"task_id": "00000003", "cell_acc": 0.9, "grid_acc": 0.5},
]


def test_distribution_defaults_to_bundled_mapping(tmp_path, capsys):
    out_path = tmp_path / "dist.json"
    code, out, _ = run(capsys, "distribution", "--out", str(out_path))
    assert code == 0
    assert "S3=108 (27.0%)" in out
    payload = json.loads(out_path.read_text())["payload"]
    assert payload["total"] == 400
    assert payload["rows"][0] == {
        "category": "S3",
        "count": 108,
        "fraction": {"numerator": 27, "denominator": 100, "value": 0.27},
        "percent": "27.0",
    }


def test_bias_prints_the_headline_ratio(capsys):
    code, out, _ = run(capsys, "bias")
    assert code == 0
    assert "141/400 = 35.3%" in out


def test_classify_then_score_roundtrip(tmp_path, capsys):
    traces_path = tmp_path / "traces.json"
    code, out, _ = run(
        capsys, "classify",
        "--input", str(FIXTURES / "generators_rules.py"),
        "--out", str(traces_path),
    )
    assert code == 0
    assert "classified 18 units (1 ambiguous)" in out

    mapping_path = tmp_path / "truth.json"
    traces = json.loads(traces_path.read_text())["payload"]["traces"]
    truth = {t["task_id"]: t["category"] for t in traces}
    truth["a0000001"] = "C1"  # inject one disagreement
    truth = {k: ("ambiguous" if v == "Ambiguous" else v) for k, v in truth.items()}
    mapping_path.write_text(json.dumps(truth), encoding="utf-8")

    score_path = tmp_path / "score.json"
    code, out, _ = run(
        capsys, "score",
        "--input", str(traces_path),
        "--mapping", str(mapping_path),
        "--out", str(score_path),
    )
    assert code == 0
    assert "16/17" in out
    confusion = score_path.with_suffix(".confusion.csv")
    assert confusion.exists()
    assert confusion.read_text().splitlines()[0].startswith("truth\\predicted")


def test_gap_subcommand(tmp_path, capsys):
    results = write_results(tmp_path, SMALL_RESULTS)
    out_path = tmp_path / "gap.json"
    code, out, _ = run(capsys, "gap", "--results", results, "--out", str(out_path))
    assert code == 0
    assert "1/3 = 33.3%" in out
    payload = json.loads(out_path.read_text())["payload"]
    assert payload["gap_task_ids"] == ["00000001"]


def test_gap_with_empty_results_file_fails_and_names_it(tmp_path, capsys):
    results = write_results(tmp_path, [])
    code, _, err = run(capsys, "gap", "--results", results)
    assert code != 0
    assert "results.json" in err
    assert "no result records" in err


def test_missing_results_file_mentions_path(tmp_path, capsys):
    code, _, err = run(capsys, "gap", "--results", str(tmp_path / "absent.json"))
    assert code != 0
    assert "absent.json" in err


def test_sensitivity_csv_output(tmp_path, capsys):
    results = write_results(tmp_path, SMALL_RESULTS)
    out_path = tmp_path / "sens.csv"
    code, out, _ = run(
        capsys, "sensitivity", "--results", results,
        "--format", "csv", "--out", str(out_path),
    )
    assert code == 0
    assert "majority pairs:" in out
    lines = out_path.read_text().splitlines()
    assert lines[0].startswith("cell_min\\grid_max,0.00,0.02")
    assert len(lines) == 7  # header + 6 cell thresholds


def test_sensitivity_custom_axes(tmp_path, capsys):
    results = write_results(tmp_path, SMALL_RESULTS)
    out_path = tmp_path / "sens.json"
    code, _, _ = run(
        capsys, "sensitivity", "--results", results,
        "--cell-axis", "0.5,0.9", "--grid-axis", "0.1,0.2",
        "--out", str(out_path),
    )
    assert code == 0
    payload = json.loads(out_path.read_text())["payload"]
    assert payload["total_pairs"] == 4


def test_ceilings_subcommand(tmp_path, capsys):
    results = write_results(
        tmp_path,
        [
            {"task_id": "0ca9ddb6", "cell_acc": 0.99, "grid_acc": 0.0},
            {"task_id": "0e206a2e", "cell_acc": 0.99, "grid_acc": 0.3},
        ],
    )
    code, out, _ = run(capsys, "ceilings", "--results", results, "--category", "A2")
    assert code == 0
    assert "1/2 = 50.0%" in out


def test_failures_subcommand_on_bundled_fixture(capsys):
    code, out, _ = run(
        capsys, "failures", "--results", str(FIXTURES / "failure_results.json")
    )
    assert code == 0
    assert "81/118 = 68.6%" in out


def test_compare_by_category(tmp_path, capsys):
    records = []
    for tid in ("00d62c1b", "0a938d79", "1bfc4729", "1f0c79e5"):  # S3 tasks
        records.append({"task_id": tid, "cell_acc": 0.9, "grid_acc": 0.05})
    for tid in ("007bbfb7", "017c7c7b", "025d127b", "045e512c"):  # C1 tasks
        records.append({"task_id": tid, "cell_acc": 0.9, "grid_acc": 0.75})
    results = write_results(tmp_path, records)
    out_path = tmp_path / "cmp.json"
    code, out, _ = run(
        capsys, "compare", "--results", results,
        "--group-a", "C1", "--group-b", "S3",
        "--out", str(out_path),
    )
    assert code == 0
    payload = json.loads(out_path.read_text())["payload"]
    assert payload["group_a"]["n"] == 4
    assert payload["mean_gap_pp"] == pytest.approx(70.0)


def test_compare_with_groups_file(tmp_path, capsys):
    records = [
        {"task_id": f"{i:08x}", "cell_acc": 0.9, "grid_acc": 0.1 * (i % 5)}
        for i in range(1, 9)
    ]
    results = write_results(tmp_path, records)
    groups = {r["task_id"]: ("one" if i < 4 else "two") for i, r in enumerate(records)}
    groups_path = tmp_path / "groups.json"
    groups_path.write_text(json.dumps(groups), encoding="utf-8")
    code, out, _ = run(
        capsys, "compare", "--results", results,
        "--groups-file", str(groups_path),
        "--group-a", "one", "--group-b", "two",
    )
    assert code == 0
    assert "mann-whitney p=" in out


def test_external_validate_prints_gap(capsys):
    code, out, _ = run(
        capsys, "external-validate",
        "--solve-rates", str(FIXTURES / "external_solve_rates.csv"),
        "--mapping", str(FIXTURES / "external_mapping.json"),
    )
    assert code == 0
    assert "VeryLow mean 0.519 vs High mean 0.777: 25.8pp gap" in out


def test_unknown_category_rejected(tmp_path, capsys):
    results = write_results(tmp_path, SMALL_RESULTS)
    code, _, err = run(capsys, "ceilings", "--results", results, "--category", "Z9")
    assert code != 0
    assert "unknown category" in err


def test_report_requires_some_input(tmp_path, capsys):
    code, _, err = run(
        capsys, "report", "--no-default-mapping", "--out", str(tmp_path / "r")
    )
    assert code != 0


def test_report_writes_dossier_and_bundle(tmp_path, capsys):
    results = write_results(tmp_path, SMALL_RESULTS)
    outdir = tmp_path / "report"
    code, out, _ = run(
        capsys, "report",
        "--input", str(FIXTURES / "generators_rules.py"),
        "--results", results,
        "--out", str(outdir),
    )
    assert code == 0
    dossier = (outdir / "dossier.md").read_text()
    assert "# Diagnostics dossier" in dossier
    assert "## Task category distribution" in dossier
    assert "## Cell/grid dissociation" in dossier
    bundle = json.loads((outdir / "bundle.json").read_text())
    assert "distribution" in bundle["payload"]["sections"]
    assert "sensitivity" in bundle["payload"]["sections"]
