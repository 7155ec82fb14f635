"""Serialization: graph-export documents, slice artifacts, and reports.

The graph export is the contract with the interactive explorer UI
(``gridlens-export/1``). Edges are emitted in dataflow orientation,
precedent -> dependent, the opposite of the slicer's internal direction,
because the explorer's narrative is "inputs flow to KPI". Ranges wider than
the collapse threshold appear as range-aggregate nodes: members feed the
aggregate, the aggregate feeds the dependents, and the member -> dependent
fan is elided (counts in ``meta`` always reflect the true expanded edges).

All writers are deterministic: identical inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping

from .addresses import CellAddress, parse_cell_text
from .engine import EvaluationResult
from .errors import SchemaError, UnknownFormatError
from .metrics import (
    CouplingMatrix,
    CouplingMetricsRow,
    DisciplineMetricsRow,
    coupling_matrix,
    coupling_metrics,
    discipline_metrics,
    function_histogram,
)
from .slicing import DEFAULT_COLLAPSE_THRESHOLD, ModelSlice, NodeKind, build_graph, slice_model
from .values import Value, value_from_jsonable, value_to_jsonable
from .workbook import Sheet, Workbook, load_workbook, workbook_to_document

EXPORT_VERSION = "gridlens-export/1"
SLICE_VERSION = "gridlens-slice/1"


# --------------------------------------------------------------------------
# Metrics bundle
# --------------------------------------------------------------------------


@dataclass
class MetricsBundle:
    """Everything the report writers and the export meta block need."""

    cell_count: int
    reference_count: int
    kpis: list[str]
    discipline_rows: list[DisciplineMetricsRow]
    matrix: CouplingMatrix
    coupling_rows: list[CouplingMetricsRow]
    histogram: dict[str, int]


def bundle_metrics(s: ModelSlice) -> MetricsBundle:
    matrix = coupling_matrix(s)
    return MetricsBundle(
        cell_count=s.cell_count,
        reference_count=s.reference_count,
        kpis=[str(k) for k in s.kpis],
        discipline_rows=discipline_metrics(s),
        matrix=matrix,
        coupling_rows=coupling_metrics(matrix),
        histogram=function_histogram(s),
    )


# --------------------------------------------------------------------------
# Graph export
# --------------------------------------------------------------------------


@dataclass
class ExportNode:
    id: str
    kind: str  # input | formula | kpi | range-aggregate
    sheet: str
    discipline: str
    label: str | None = None
    value: Value = None
    has_value: bool = False
    formula_text: str | None = None
    member_count: int | None = None


@dataclass
class GraphExport:
    version: str
    nodes: list[ExportNode]
    edges: list[tuple[str, str]]  # (from, to), dataflow orientation
    meta: dict


def _node_id(addr: CellAddress) -> str:
    return str(addr)


def export_graph(
    s: ModelSlice,
    bundle: MetricsBundle | None = None,
    baseline: EvaluationResult | None = None,
) -> GraphExport:
    """Build the explorer document for a slice.

    Values are attached for literal cells always, and for formula cells when
    a baseline evaluation is supplied.
    """
    if bundle is None:
        bundle = bundle_metrics(s)
    wb = s.workbook
    kpi_set = set(s.kpis)

    sheet_order = {name: i for i, name in enumerate(wb.sheet_names)}
    ordered_cells = sorted(
        s.graph.nodes,
        key=lambda a: (sheet_order.get(a.sheet, len(sheet_order)), a.sort_key),
    )

    nodes: list[ExportNode] = []
    for addr in ordered_cells:
        kind = s.graph.nodes[addr]
        cell = wb.get_cell(addr)
        if addr in kpi_set:
            node_kind = "kpi"
        elif kind is NodeKind.FORMULA:
            node_kind = "formula"
        else:
            node_kind = "input"
        node = ExportNode(
            id=_node_id(addr),
            kind=node_kind,
            sheet=addr.sheet,
            discipline=s.graph.discipline_of(addr),
            label=cell.label if cell else None,
        )
        if kind is NodeKind.FORMULA:
            node.formula_text = cell.content.text
            if baseline is not None and addr in baseline.values:
                node.value = baseline.values[addr]
                node.has_value = True
        else:
            node.value = cell.content.value if cell else None
            node.has_value = True
        nodes.append(node)

    collapsed: dict[CellAddress, list] = {}
    aggregate_nodes: list[ExportNode] = []
    for agg in sorted(s.graph.aggregates, key=lambda a: str(a.cells)):
        rid = str(agg.cells)
        aggregate_nodes.append(
            ExportNode(
                id=rid,
                kind="range-aggregate",
                sheet=agg.cells.sheet,
                discipline=wb.discipline_of(agg.cells.sheet),
                member_count=agg.member_count,
            )
        )
        for member in agg.cells.addresses():
            collapsed.setdefault(member, []).append(agg)
    nodes.extend(aggregate_nodes)

    edges: set[tuple[str, str]] = set()
    for dependent, targets in s.graph.edges.items():
        for precedent in targets:
            covering = [
                agg
                for agg in collapsed.get(precedent, ())
                if dependent in agg.dependents
            ]
            if covering:
                for agg in covering:
                    edges.add((_node_id(precedent), str(agg.cells)))
                    edges.add((str(agg.cells), _node_id(dependent)))
            else:
                edges.add((_node_id(precedent), _node_id(dependent)))

    meta = {
        "kpis": [str(k) for k in s.kpis],
        "cellCount": s.cell_count,
        "expandedReferenceCount": s.reference_count,
        "disciplineMetrics": [
            {
                "discipline": r.discipline,
                "cellCount": r.cell_count,
                "inputCount": r.input_count,
                "pctInputs": r.pct_inputs,
                "avgValency": r.avg_valency,
            }
            for r in bundle.discipline_rows
        ],
        "couplingMatrix": {
            "disciplines": list(bundle.matrix.disciplines),
            "direct": [list(row) for row in bundle.matrix.direct],
            "indirect": [list(row) for row in bundle.matrix.indirect],
        },
    }
    return GraphExport(
        version=EXPORT_VERSION,
        nodes=nodes,
        edges=sorted(edges),
        meta=meta,
    )


def graph_export_to_document(export: GraphExport) -> dict:
    nodes = []
    for n in export.nodes:
        entry: dict = {
            "id": n.id,
            "kind": n.kind,
            "sheet": n.sheet,
            "discipline": n.discipline,
        }
        if n.label is not None:
            entry["label"] = n.label
        if n.has_value:
            entry["value"] = value_to_jsonable(n.value)
        if n.formula_text is not None:
            entry["formulaText"] = n.formula_text
        if n.member_count is not None:
            entry["memberCount"] = n.member_count
        nodes.append(entry)
    return {
        "version": export.version,
        "nodes": nodes,
        "edges": [{"from": a, "to": b} for a, b in export.edges],
        "meta": export.meta,
    }


def load_export(document: bytes | str | Mapping) -> GraphExport:
    """Parse a graph-export document back into its typed form.

    ``load_export(graph_export_to_document(x))`` equals ``x``.
    """
    if isinstance(document, (bytes, str)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaError("graph export must be a JSON object")
    if document.get("version") != EXPORT_VERSION:
        raise SchemaError(
            f"unsupported graph export version {document.get('version')!r}"
        )
    node_ids = set()
    nodes = []
    for raw in document.get("nodes", []):
        node = ExportNode(
            id=raw["id"],
            kind=raw["kind"],
            sheet=raw["sheet"],
            discipline=raw["discipline"],
            label=raw.get("label"),
            formula_text=raw.get("formulaText"),
            member_count=raw.get("memberCount"),
        )
        if "value" in raw:
            node.value = value_from_jsonable(raw["value"])
            node.has_value = True
        if node.id in node_ids:
            raise SchemaError(f"duplicate node id {node.id!r}")
        node_ids.add(node.id)
        nodes.append(node)
    edges = []
    for raw in document.get("edges", []):
        if raw["from"] not in node_ids or raw["to"] not in node_ids:
            raise SchemaError(f"edge endpoint not declared: {raw}")
        edges.append((raw["from"], raw["to"]))
    return GraphExport(
        version=document["version"],
        nodes=nodes,
        edges=edges,
        meta=document.get("meta", {}),
    )


def write_export(export: GraphExport) -> bytes:
    return json.dumps(graph_export_to_document(export), indent=2).encode("utf-8")


# --------------------------------------------------------------------------
# Slice artifacts
# --------------------------------------------------------------------------


def slice_to_document(s: ModelSlice) -> dict:
    """Persist a slice so downstream commands never re-read the workbook.

    The artifact embeds the slice-restricted workbook content (implicit
    blanks regenerate on load), the KPI list, and the collapse threshold.
    """
    wb = s.workbook
    kept_sheets = {a.sheet for a in s.graph.nodes if wb.has_sheet(a.sheet)}
    restricted = Workbook(
        sheets=[],
        defined_names=dict(wb.defined_names),
        disciplines={name: wb.discipline_of(name) for name in wb.sheet_names if name in kept_sheets},
    )
    for sheet in wb.sheets:
        if sheet.name not in kept_sheets:
            continue
        kept = {a: c for a, c in sheet.cells.items() if a in s.graph.nodes}
        restricted.sheets.append(Sheet(sheet.name, kept))
    return {
        "version": SLICE_VERSION,
        "kpis": [str(k) for k in s.kpis],
        "collapseThreshold": s.graph.collapse_threshold,
        "workbook": workbook_to_document(restricted),
    }


def write_slice(s: ModelSlice) -> bytes:
    return json.dumps(slice_to_document(s), indent=2).encode("utf-8")


def load_slice(document: bytes | str | Mapping) -> ModelSlice:
    """Rebuild a slice from its artifact.

    The calculation graph is re-derived from the embedded (already sliced)
    formulas, so the result is identical to the slice that was saved.
    """
    if isinstance(document, (bytes, str)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaError("slice artifact must be a JSON object")
    if document.get("version") != SLICE_VERSION:
        raise SchemaError(f"unsupported slice artifact version {document.get('version')!r}")
    wb = load_workbook(document.get("workbook", {}))
    threshold = document.get("collapseThreshold", DEFAULT_COLLAPSE_THRESHOLD)
    graph = build_graph(wb, collapse_threshold=threshold)
    kpis = [parse_cell_text(text) for text in document.get("kpis", [])]
    return slice_model(graph, kpis)


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


def _round_half_up(x: float) -> int:
    if x < 0:
        return -_round_half_up(-x)
    return int(x + 0.5)


def format_percent(fraction: float) -> str:
    return f"{_round_half_up(fraction * 100)}%"


def format_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _discipline_table(bundle: MetricsBundle) -> tuple[list[str], list[list[str]]]:
    header = ["Discipline Model", "Cell Counts", "Inputs", "% Inputs", "Average Valency"]
    rows = [
        [
            r.discipline,
            str(r.cell_count),
            str(r.input_count),
            format_percent(r.pct_inputs),
            f"{r.avg_valency:.2f}",
        ]
        for r in bundle.discipline_rows
    ]
    return header, rows


def _matrix_table(bundle: MetricsBundle) -> tuple[list[str], list[list[str]]]:
    header = [""] + list(bundle.matrix.disciplines)
    rows = [
        [d] + [str(v) for v in bundle.matrix.direct[i]]
        for i, d in enumerate(bundle.matrix.disciplines)
    ]
    return header, rows


def _coupling_table(bundle: MetricsBundle) -> tuple[list[str], list[list[str]]]:
    header = ["Discipline", "Afferent", "Efferent", "Instability"]
    rows = [
        [r.discipline, str(r.afferent), str(r.efferent), format_percent(r.instability)]
        for r in bundle.coupling_rows
    ]
    return header, rows


def _histogram_table(bundle: MetricsBundle) -> tuple[list[str], list[list[str]]]:
    header = ["Function", "Count"]
    rows = [[name, str(count)] for name, count in bundle.histogram.items()]
    return header, rows


_SECTIONS = [
    ("Discipline Metrics", _discipline_table),
    ("Coupling Matrix", _matrix_table),
    ("Coupling Metrics", _coupling_table),
    ("Function Histogram", _histogram_table),
]


def csv_table(header: list[str], rows: list[list[str]]) -> bytes:
    """One RFC-4180 table (CRLF line endings, minimal quoting)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def markdown_table(header: list[str], rows: list[list[str]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines)


def write_report(bundle: MetricsBundle, fmt: str) -> bytes:
    """Render the full metrics bundle as csv, markdown, or json bytes."""
    if fmt == "csv":
        parts = []
        for title, build in _SECTIONS:
            header, rows = build(bundle)
            parts.append(csv_table([title], []) + csv_table(header, rows))
        return b"\r\n".join(parts)
    if fmt == "markdown":
        parts = []
        for title, build in _SECTIONS:
            header, rows = build(bundle)
            parts.append(f"## {title}\n\n" + markdown_table(header, rows))
        return ("\n\n".join(parts) + "\n").encode("utf-8")
    if fmt == "json":
        doc = {
            "cellCount": bundle.cell_count,
            "expandedReferenceCount": bundle.reference_count,
            "kpis": bundle.kpis,
            "disciplineMetrics": [
                {
                    "discipline": r.discipline,
                    "cellCount": r.cell_count,
                    "inputCount": r.input_count,
                    "pctInputs": r.pct_inputs,
                    "avgValency": r.avg_valency,
                }
                for r in bundle.discipline_rows
            ],
            "couplingMatrix": {
                "disciplines": list(bundle.matrix.disciplines),
                "direct": [list(row) for row in bundle.matrix.direct],
                "indirect": [list(row) for row in bundle.matrix.indirect],
            },
            "couplingMetrics": [
                {
                    "discipline": r.discipline,
                    "afferent": r.afferent,
                    "efferent": r.efferent,
                    "instability": r.instability,
                }
                for r in bundle.coupling_rows
            ],
            "functionHistogram": bundle.histogram,
        }
        return json.dumps(doc, indent=2).encode("utf-8")
    raise UnknownFormatError(f"unsupported report format {fmt!r}")


def coupling_metrics_csv(rows: list[CouplingMetricsRow]) -> bytes:
    """Just the coupling-metrics table, as written inside full reports."""
    header = ["Discipline", "Afferent", "Efferent", "Instability"]
    body = [
        [r.discipline, str(r.afferent), str(r.efferent), format_percent(r.instability)]
        for r in rows
    ]
    return csv_table(header, body)


def write_sensitivity_csv(report) -> bytes:
    """Sensitivity report: factor name, cell, discipline, then per-KPI
    rawEffect and normalized columns; rows sorted by the first KPI's
    normalized score, descending (ties by factor name then cell)."""
    kpi_names = [str(k) for k in report.kpis]
    header = ["Factor", "Cell", "Discipline"]
    for name in kpi_names:
        header.extend([f"{name} rawEffect", f"{name} normalized"])
    normalized = report.normalized
    if normalized is None:
        normalized = [[0.0] * len(kpi_names) for _ in report.factors]
    indexed = sorted(
        range(len(report.factors)),
        key=lambda j: (
            -(normalized[j][0] if kpi_names else 0.0),
            report.factors[j].name,
            str(report.factors[j].cell),
        ),
    )
    rows = []
    for j in indexed:
        f = report.factors[j]
        row = [f.name, str(f.cell), f.discipline]
        for q in range(len(kpi_names)):
            row.append(format_number(report.raw_effects[j][q]))
            row.append(format_number(normalized[j][q]))
        rows.append(row)
    return csv_table(header, rows)
