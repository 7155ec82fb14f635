"""Command-line pipeline: slice, metrics, sensitivity, compare, export-graph.

Exit codes are fixed for scriptability: 0 success, 2 parse/schema/file
errors, 3 unknown KPI, 4 circular reference, 5 failed sensitivity runs.
Every command is deterministic: the same inputs and flags produce identical
artifacts (no timestamps, version strings only).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .addresses import parse_cell_text
from .engine import Evaluator
from .errors import (
    CycleError,
    FormulaParseError,
    GridLensError,
    IncompleteRunsError,
    SchemaError,
    UnknownKpiError,
)
from .export import (
    bundle_metrics,
    export_graph,
    load_slice,
    write_export,
    write_report,
    write_sensitivity_csv,
    write_slice,
)
from .metrics import compare_models, quadrant_findings
from .sensitivity import estimate_effects, normalize_effects, pb_design, run_experiments
from .slicing import (
    DEFAULT_COLLAPSE_THRESHOLD,
    build_graph,
    identify_variable_inputs,
    load_factor_file,
    slice_model,
)
from .workbook import load_workbook, validate_workbook

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_UNKNOWN_KPI = 3
EXIT_CYCLE = 4
EXIT_FAILED_RUNS = 5


def _plural(count: int, noun: str) -> str:
    return f"{count} {noun}" if count == 1 else f"{count} {noun}s"


def _read(path: str) -> bytes:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"no such file: {path}")
    return p.read_bytes()


def _load_slice_artifact(path: str):
    return load_slice(_read(path))


def _check_for_cycles(model_slice) -> None:
    # Constructing an evaluator over the slice scope performs the ordering
    # pass; a cycle on any KPI path surfaces here.
    Evaluator(model_slice.workbook, scope=model_slice.addresses)


def cmd_slice(args: argparse.Namespace) -> int:
    wb = load_workbook(_read(args.workbook))
    if args.disciplines:
        overrides = json.loads(_read(args.disciplines))
        if not isinstance(overrides, dict):
            raise SchemaError("disciplines file must map sheet names to disciplines")
        for sheet, discipline in overrides.items():
            if not wb.has_sheet(sheet):
                raise SchemaError(f"disciplines file names unknown sheet {sheet!r}")
            wb.disciplines[sheet] = discipline
    for finding in validate_workbook(wb).findings:
        print(
            f"{finding.severity.value}: {finding.kind} at {finding.location}: {finding.message}",
            file=sys.stderr,
        )
    graph = build_graph(wb, collapse_threshold=args.collapse_threshold)
    kpis = [parse_cell_text(text) for text in args.kpi]
    for kpi in kpis:
        if kpi.sheet == "":
            raise SchemaError(f"KPI {kpi.a1!r} must be sheet-qualified (Sheet!A1)")
    model_slice = slice_model(graph, kpis)
    _check_for_cycles(model_slice)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifact = out_dir / "slice.json"
    artifact.write_bytes(write_slice(model_slice))
    print(
        f"{_plural(model_slice.cell_count, 'cell')}, "
        f"{_plural(len(model_slice.inputs), 'input')}, "
        f"{_plural(model_slice.reference_count, 'reference')}"
    )
    print(f"wrote {artifact}")
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    model_slice = _load_slice_artifact(args.slice)
    bundle = bundle_metrics(model_slice)
    payload = write_report(bundle, args.format)
    if args.check_quadrant:
        findings = quadrant_findings(bundle.matrix)
        for finding in findings:
            print(f"{finding.severity.value}: {finding.message}", file=sys.stderr)
    if args.out:
        ext = {"csv": "csv", "markdown": "md", "json": "json"}[args.format]
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        target = out_dir / f"metrics.{ext}"
        target.write_bytes(payload)
        print(f"wrote {target}")
    else:
        sys.stdout.write(payload.decode("utf-8"))
    return EXIT_OK


def cmd_sensitivity(args: argparse.Namespace) -> int:
    model_slice = _load_slice_artifact(args.slice)
    factor_entries = load_factor_file(_read(args.factors))
    factors = identify_variable_inputs(model_slice, factor_entries)
    variable = [f for f in factors if f.variable]
    if not variable:
        raise SchemaError("factor file defines no variable factors (all ranges zero-width)")

    kpis = [parse_cell_text(text) for text in args.kpi] if args.kpi else None
    design = pb_design(len(variable), foldover=args.foldover)
    responses = run_experiments(model_slice, variable, design, kpis=kpis, jobs=args.jobs)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    design_doc = {
        "runs": design.runs,
        "factors": design.factors,
        "dummyColumns": design.dummy_columns,
        "folded": design.folded,
        "matrix": design.rows,
    }
    (out_dir / "design.json").write_text(json.dumps(design_doc, indent=2))
    responses_doc = {
        "runs": responses.runs,
        "kpis": [str(k) for k in responses.kpis],
        "values": responses.values,
        "failedRuns": [[i, kind.name] for i, kind in responses.failed_runs],
    }
    (out_dir / "responses.json").write_text(json.dumps(responses_doc, indent=2))

    if responses.failed_runs:
        for i, kind in responses.failed_runs:
            print(f"run {i} failed: {kind.code}", file=sys.stderr)
        print(f"{len(responses.failed_runs)} of {responses.runs} runs failed", file=sys.stderr)
        return EXIT_FAILED_RUNS

    report = normalize_effects(estimate_effects(design, responses))
    target = out_dir / "sensitivity.csv"
    target.write_bytes(write_sensitivity_csv(report))
    print(f"{design.runs} runs over {len(variable)} factors; wrote {target}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    if len(args.slice) != 2:
        raise SchemaError("compare needs exactly two --slice artifacts")
    before = _load_slice_artifact(args.slice[0])
    after = _load_slice_artifact(args.slice[1])
    report = compare_models(before, after)

    def signed(n: int) -> str:
        return f"+{n}" if n >= 0 else str(n)

    print(f"{'':24}{'before':>12}{'after':>12}{'delta':>12}")
    print(
        f"{'cells':24}{report.before.cell_count:>12}"
        f"{report.after.cell_count:>12}{signed(report.cell_delta):>12}"
    )
    print(
        f"{'references':24}{report.before.reference_count:>12}"
        f"{report.after.reference_count:>12}{signed(report.reference_delta):>12}"
    )
    for name, delta in report.histogram_delta.items():
        b = report.before.histogram.get(name, 0)
        a = report.after.histogram.get(name, 0)
        print(f"{name:24}{b:>12}{a:>12}{signed(delta):>12}")
    for name in report.added_disciplines:
        print(f"added discipline: {name}")
    for name in report.removed_disciplines:
        print(f"removed discipline: {name}")
    return EXIT_OK


def cmd_export_graph(args: argparse.Namespace) -> int:
    model_slice = _load_slice_artifact(args.slice)
    baseline = None
    if args.with_values:
        baseline = Evaluator(model_slice.workbook, scope=model_slice.addresses).run()
    document = export_graph(model_slice, bundle_metrics(model_slice), baseline=baseline)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(write_export(document))
    print(f"wrote {out} ({len(document.nodes)} nodes, {len(document.edges)} edges)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridlens",
        description="Slice spreadsheet models from KPI cells, compute "
        "multidisciplinary metrics, and run factor-screening sensitivity analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("slice", help="extract the backward slice of chosen KPI cells")
    p.add_argument("--workbook", required=True, help="workbook interchange JSON")
    p.add_argument("--kpi", action="append", required=True, metavar="SHEET!CELL")
    p.add_argument("--disciplines", help="optional sheet-to-discipline JSON map")
    p.add_argument("--collapse-threshold", type=int, default=DEFAULT_COLLAPSE_THRESHOLD)
    p.add_argument("--out", required=True, help="output directory for slice.json")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("metrics", help="discipline, coupling, and histogram tables")
    p.add_argument("--slice", required=True, help="slice artifact from `slice`")
    p.add_argument("--format", choices=["csv", "markdown", "json"], default="csv")
    p.add_argument("--check-quadrant", action="store_true",
                   help="warn when input models read from output models")
    p.add_argument("--out", help="write metrics.<ext> here instead of stdout")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sensitivity", help="Plackett-Burman factor screening")
    p.add_argument("--slice", required=True)
    p.add_argument("--factors", required=True, help="factor ranges JSON")
    p.add_argument("--kpi", action="append", metavar="SHEET!CELL",
                   help="subset of the slice's KPIs (default: all)")
    p.add_argument("--foldover", action="store_true",
                   help="append the sign-flipped design to de-alias interactions")
    p.add_argument("--jobs", type=int, default=1, help="concurrent scenario evaluations")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("compare", help="size/composition deltas between two slices")
    p.add_argument("--slice", action="append", required=True,
                   help="give twice: before and after artifacts")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-graph", help="write the explorer UI document")
    p.add_argument("--slice", required=True)
    p.add_argument("--out", required=True, help="output JSON file")
    p.add_argument("--with-values", action="store_true",
                   help="attach baseline-evaluated values to formula nodes")
    p.set_defaults(func=cmd_export_graph)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnknownKpiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_KPI
    except CycleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CYCLE
    except IncompleteRunsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED_RUNS
    except (SchemaError, FormulaParseError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except GridLensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    raise SystemExit(main())
