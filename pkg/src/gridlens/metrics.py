"""Multidisciplinary model metrics computed over a slice.

Disciplines partition the calculation graph by worksheet ownership. The
coupling matrix counts expanded cross-discipline edges with the convention
"row provides, column consumes": entry[r][c] is the number of cell references
made by discipline c into discipline r. Afferent/efferent coupling and
instability treat disciplines like software packages: afferent counts the
other disciplines that read from a model, efferent counts the other models it
reads, and instability = efferent / (afferent + efferent) ranges from 0
(stable to change) to 1 (unstable), defined as 0 for an isolated model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .addresses import CellAddress
from .errors import EmptySliceError
from .formula import function_names
from .slicing import ModelSlice
from .workbook import Finding, Severity


@dataclass(frozen=True, slots=True)
class DisciplineMetricsRow:
    discipline: str
    cell_count: int
    input_count: int
    pct_inputs: float  # fraction in [0, 1]
    avg_valency: float


@dataclass
class CouplingMatrix:
    disciplines: list[str]
    direct: list[list[int]]
    indirect: list[list[bool]]

    def entry(self, provider: str, consumer: str) -> int:
        r = self.disciplines.index(provider)
        c = self.disciplines.index(consumer)
        return self.direct[r][c]

    @property
    def total_references(self) -> int:
        return sum(sum(row) for row in self.direct)


@dataclass(frozen=True, slots=True)
class CouplingMetricsRow:
    discipline: str
    afferent: int
    efferent: int
    instability: float  # fraction in [0, 1]


@dataclass
class ModelSnapshot:
    """Size and composition figures for one model slice, comparable across
    model generations."""

    cell_count: int
    reference_count: int
    histogram: dict[str, int]
    discipline_rows: list[DisciplineMetricsRow] = field(default_factory=list)


@dataclass
class EvolutionReport:
    before: ModelSnapshot
    after: ModelSnapshot
    cell_delta: int
    reference_delta: int
    histogram_delta: dict[str, int]
    # Rows paired by discipline name; one side is None for added/removed.
    discipline_pairs: list[tuple[str, DisciplineMetricsRow | None, DisciplineMetricsRow | None]]
    added_disciplines: list[str]
    removed_disciplines: list[str]


def _slice_disciplines(s: ModelSlice) -> list[str]:
    """Disciplines present in the slice, ordered by first appearance over
    the workbook's sheet order, then by name for sheets outside it."""
    present = {s.graph.discipline_of(a) for a in s.graph.nodes}
    ordered: list[str] = []
    for sheet in s.workbook.sheet_names:
        d = s.workbook.discipline_of(sheet)
        if d in present and d not in ordered:
            ordered.append(d)
    for d in sorted(present):
        if d not in ordered:
            ordered.append(d)
    return ordered


def discipline_metrics(s: ModelSlice) -> list[DisciplineMetricsRow]:
    """Cell count, input count, input share, and average valency per
    discipline.

    Valency counts a cell's expanded edges in both directions, restricted to
    the slice; a discipline's average is taken over its own cells, edges to
    other disciplines included.
    """
    order = _slice_disciplines(s)
    counts = {d: 0 for d in order}
    inputs = {d: 0 for d in order}
    valency_sum = {d: 0 for d in order}
    for addr in s.graph.nodes:
        d = s.graph.discipline_of(addr)
        counts[d] += 1
        valency_sum[d] += s.graph.valency(addr)
        if addr in s.inputs:
            inputs[d] += 1
    return [
        DisciplineMetricsRow(
            discipline=d,
            cell_count=counts[d],
            input_count=inputs[d],
            pct_inputs=(inputs[d] / counts[d]) if counts[d] else 0.0,
            avg_valency=(valency_sum[d] / counts[d]) if counts[d] else 0.0,
        )
        for d in order
    ]


def average_valency(node_count: int, edge_count: int) -> float:
    """Mean degree of a graph: 2E/N."""
    if node_count <= 0:
        raise EmptySliceError("valency is undefined for an empty graph")
    return 2.0 * edge_count / node_count


def global_valency(s: ModelSlice) -> float:
    """Average valency of the whole slice (2E/N over expanded edges)."""
    return average_valency(s.cell_count, s.reference_count)


def coupling_matrix(s: ModelSlice) -> CouplingMatrix:
    """Tally expanded edges by (provider discipline, consumer discipline).

    ``indirect[r][c]`` is set when c does not read r directly but a chain of
    references through at least one intermediate discipline connects them.
    """
    order = _slice_disciplines(s)
    index = {d: i for i, d in enumerate(order)}
    n = len(order)
    direct = [[0] * n for _ in range(n)]
    for source, targets in s.graph.edges.items():
        c = index[s.graph.discipline_of(source)]
        for target in targets:
            r = index[s.graph.discipline_of(target)]
            direct[r][c] += 1

    # Discipline-condensed reachability for the indirect flags: consumer ->
    # provider steps over the direct entries.
    successors: list[set[int]] = [
        {r for r in range(n) if r != c and direct[r][c] > 0} for c in range(n)
    ]
    indirect = [[False] * n for _ in range(n)]
    for c in range(n):
        reached: set[int] = set()
        frontier = list(successors[c])
        while frontier:
            node = frontier.pop()
            if node in reached:
                continue
            reached.add(node)
            frontier.extend(successors[node])
        for r in reached:
            if r != c and direct[r][c] == 0:
                indirect[r][c] = True
    return CouplingMatrix(order, direct, indirect)


def coupling_metrics(m: CouplingMatrix) -> list[CouplingMetricsRow]:
    """Afferent/efferent coupling and instability per discipline.

    Couplings count distinct other disciplines with a nonzero direct entry;
    internal (diagonal) references are excluded.
    """
    n = len(m.disciplines)
    rows = []
    for d in range(n):
        afferent = sum(1 for c in range(n) if c != d and m.direct[d][c] > 0)
        efferent = sum(1 for r in range(n) if r != d and m.direct[r][d] > 0)
        total = afferent + efferent
        instability = (efferent / total) if total else 0.0
        rows.append(CouplingMetricsRow(m.disciplines[d], afferent, efferent, instability))
    return rows


def function_histogram(s: ModelSlice) -> dict[str, int]:
    """Occurrences of every function call in the slice's formulas, nested
    calls included. Ordered by descending count, ties by name."""
    counts: dict[str, int] = {}
    wb = s.workbook
    for addr in s.graph.nodes:
        cell = wb.get_cell(addr)
        if cell is None or not cell.is_formula:
            continue
        for name in function_names(cell.content.ast):
            counts[name] = counts.get(name, 0) + 1
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def top_referenced(s: ModelSlice, k: int) -> list[tuple[CellAddress, int]]:
    """The k most-referenced cells of the slice by expanded in-degree,
    ties broken by address order (sheet, row, column)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(
        ((addr, s.graph.in_degree(addr)) for addr in s.graph.nodes),
        key=lambda pair: (-pair[1], pair[0].sort_key),
    )
    return ranked[:k]


def snapshot(s: ModelSlice) -> ModelSnapshot:
    return ModelSnapshot(
        cell_count=s.cell_count,
        reference_count=s.reference_count,
        histogram=function_histogram(s),
        discipline_rows=discipline_metrics(s),
    )


def compare_snapshots(before: ModelSnapshot, after: ModelSnapshot) -> EvolutionReport:
    """Exact count deltas between two model snapshots."""
    names = sorted(set(before.histogram) | set(after.histogram))
    histogram_delta = {
        name: after.histogram.get(name, 0) - before.histogram.get(name, 0) for name in names
    }
    before_rows = {r.discipline: r for r in before.discipline_rows}
    after_rows = {r.discipline: r for r in after.discipline_rows}
    ordered = [r.discipline for r in before.discipline_rows]
    ordered += [r.discipline for r in after.discipline_rows if r.discipline not in before_rows]
    pairs = [(d, before_rows.get(d), after_rows.get(d)) for d in ordered]
    return EvolutionReport(
        before=before,
        after=after,
        cell_delta=after.cell_count - before.cell_count,
        reference_delta=after.reference_count - before.reference_count,
        histogram_delta=histogram_delta,
        discipline_pairs=pairs,
        added_disciplines=sorted(set(after_rows) - set(before_rows)),
        removed_disciplines=sorted(set(before_rows) - set(after_rows)),
    )


def compare_models(a: ModelSlice, b: ModelSlice) -> EvolutionReport:
    """Compare two slices (typically generations of the same model)."""
    return compare_snapshots(snapshot(a), snapshot(b))


def quadrant_findings(
    m: CouplingMatrix, output_disciplines: Iterable[str] | None = None
) -> list[Finding]:
    """Check the input/output-model design rule on a coupling matrix.

    Well-formed models never have an input model reading from an output
    model. Output models are the given names, or by default disciplines
    whose name starts with "Out" or "SS" or mentions "output"
    (case-insensitive), which also covers summary dashboards. Violations are
    findings, not failures: user models may legitimately break the rule.
    """
    if output_disciplines is None:
        outputs = {
            d
            for d in m.disciplines
            if d.casefold().startswith(("out", "ss")) or "output" in d.casefold()
        }
    else:
        outputs = set(output_disciplines)
    findings = []
    for r, provider in enumerate(m.disciplines):
        if provider not in outputs:
            continue
        for c, consumer in enumerate(m.disciplines):
            if consumer in outputs or consumer == provider:
                continue
            if m.direct[r][c] > 0:
                findings.append(
                    Finding(
                        Severity.WARNING,
                        "input-reads-output",
                        consumer,
                        f"input model {consumer!r} reads {m.direct[r][c]} "
                        f"value(s) from output model {provider!r}",
                    )
                )
    return findings
