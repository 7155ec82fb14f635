"""Calculation-graph construction and backward slicing from KPI cells.

Edges run dependent -> precedent (an edge u -> v means u's formula reads v),
so extracting the cells involved in a KPI is a plain forward traversal from
the KPI nodes. Ranges are expanded to their member cells when counting
edges; ranges wider than the collapse threshold are additionally recorded as
aggregate overlay entries for presentation, which never changes expanded
counts.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .addresses import CellAddress, CellRange, parse_cell_text
from .errors import FactorTargetError, SchemaError, UnknownKpiError
from .formula import RefContext, extract_references
from .workbook import Workbook

DEFAULT_COLLAPSE_THRESHOLD = 10


class NodeKind(enum.Enum):
    INPUT = "input"          # defined literal cell
    FORMULA = "formula"      # defined formula cell
    BLANK = "blank"          # referenced but undefined; reads as blank
    DANGLING = "dangling"    # referenced on a sheet the workbook lacks


@dataclass(frozen=True, slots=True)
class RangeAggregate:
    """Presentation overlay for a wide range: one node standing in for its
    members."""

    cells: CellRange
    member_count: int
    dependents: frozenset[CellAddress]


@dataclass
class DependencyGraph:
    """Directed cell-reference graph of one workbook.

    ``edges[u]`` maps each precedent v of u to the set of reference contexts
    under which u reads v. Edge pairs are deduplicated: a formula referencing
    the same cell twice contributes one edge (possibly with two context
    tags). ``reverse`` is the mirrored adjacency for in-degree queries.
    """

    workbook: Workbook
    nodes: dict[CellAddress, NodeKind] = field(default_factory=dict)
    edges: dict[CellAddress, dict[CellAddress, set[RefContext]]] = field(default_factory=dict)
    reverse: dict[CellAddress, set[CellAddress]] = field(default_factory=dict)
    aggregates: list[RangeAggregate] = field(default_factory=list)
    collapse_threshold: int = DEFAULT_COLLAPSE_THRESHOLD

    @property
    def expanded_edge_count(self) -> int:
        return sum(len(targets) for targets in self.edges.values())

    def out_degree(self, addr: CellAddress) -> int:
        return len(self.edges.get(addr, ()))

    def in_degree(self, addr: CellAddress) -> int:
        return len(self.reverse.get(addr, ()))

    def valency(self, addr: CellAddress) -> int:
        return self.out_degree(addr) + self.in_degree(addr)

    def discipline_of(self, addr: CellAddress) -> str:
        return self.workbook.discipline_of(addr.sheet)


@dataclass
class ModelSlice:
    """The sub-graph backward-reachable from the chosen KPI cells.

    ``inputs`` are the literal-content cells of the slice (defined literals,
    implicit blanks, and dangling references); formula cells are never
    inputs.
    """

    graph: DependencyGraph
    kpis: list[CellAddress]
    inputs: set[CellAddress]

    @property
    def workbook(self) -> Workbook:
        return self.graph.workbook

    @property
    def addresses(self) -> set[CellAddress]:
        return set(self.graph.nodes)

    @property
    def cell_count(self) -> int:
        return len(self.graph.nodes)

    @property
    def reference_count(self) -> int:
        return self.graph.expanded_edge_count


def build_graph(
    wb: Workbook, collapse_threshold: int = DEFAULT_COLLAPSE_THRESHOLD
) -> DependencyGraph:
    """Build the full dependency graph of a workbook.

    Nodes cover every defined cell plus every referenced cell; references to
    sheets the workbook lacks become dangling nodes rather than failures.
    """
    g = DependencyGraph(workbook=wb, collapse_threshold=collapse_threshold)

    def implicit_kind(addr: CellAddress) -> NodeKind:
        return NodeKind.BLANK if wb.has_sheet(addr.sheet) else NodeKind.DANGLING

    for cell in wb.iter_cells():
        g.nodes[cell.address] = NodeKind.FORMULA if cell.is_formula else NodeKind.INPUT

    aggregate_deps: dict[CellRange, set[CellAddress]] = {}
    for cell in wb.formula_cells():
        source = cell.address
        adjacency = g.edges.setdefault(source, {})
        refs = extract_references(cell.content.ast, wb.defined_names)
        for occ in refs.occurrences:
            if isinstance(occ.target, CellRange):
                members = list(occ.target.addresses())
                if occ.target.member_count > collapse_threshold:
                    aggregate_deps.setdefault(occ.target, set()).add(source)
            else:
                members = [occ.target]
            for member in members:
                if member not in g.nodes:
                    g.nodes[member] = implicit_kind(member)
                adjacency.setdefault(member, set()).add(occ.context)
                g.reverse.setdefault(member, set()).add(source)

    g.aggregates = [
        RangeAggregate(r, r.member_count, frozenset(deps))
        for r, deps in sorted(aggregate_deps.items(), key=lambda kv: str(kv[0]))
    ]
    return g


def _restrict(g: DependencyGraph, keep: set[CellAddress]) -> DependencyGraph:
    sub = DependencyGraph(workbook=g.workbook, collapse_threshold=g.collapse_threshold)
    sub.nodes = {a: k for a, k in g.nodes.items() if a in keep}
    for source, targets in g.edges.items():
        if source not in keep:
            continue
        kept = {t: set(ctx) for t, ctx in targets.items() if t in keep}
        if kept:
            sub.edges[source] = kept
            for t in kept:
                sub.reverse.setdefault(t, set()).add(source)
    sub.aggregates = [
        RangeAggregate(a.cells, a.member_count, frozenset(d for d in a.dependents if d in keep))
        for a in g.aggregates
        if any(d in keep for d in a.dependents)
    ]
    return sub


def slice_model(g: DependencyGraph, kpis: Iterable[CellAddress]) -> ModelSlice:
    """Extract the backward slice: all cells reachable from the KPIs along
    dependent -> precedent edges. Slicing a slice's graph again with the
    same KPIs is a fixed point.
    """
    kpi_list: list[CellAddress] = []
    for kpi in kpis:
        if kpi not in g.nodes:
            raise UnknownKpiError(kpi)
        if kpi not in kpi_list:
            kpi_list.append(kpi)

    reached: set[CellAddress] = set()
    frontier = deque(kpi_list)
    while frontier:
        addr = frontier.popleft()
        if addr in reached:
            continue
        reached.add(addr)
        for precedent in g.edges.get(addr, ()):
            if precedent not in reached:
                frontier.append(precedent)

    sub = _restrict(g, reached)
    inputs = {a for a, kind in sub.nodes.items() if kind is not NodeKind.FORMULA}
    return ModelSlice(graph=sub, kpis=kpi_list, inputs=inputs)


# --------------------------------------------------------------------------
# Sensitivity factors
# --------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class FactorSpec:
    """One candidate input for sensitivity analysis.

    ``variable`` factors carry a strict min < max range; inputs without a
    practitioner-supplied range (or with a zero-width one) are fixed.
    """

    cell: CellAddress
    name: str
    minimum: float | None
    maximum: float | None
    discipline: str
    variable: bool

    @property
    def range_missing(self) -> bool:
        return self.minimum is None or self.maximum is None


def load_factor_file(document: bytes | str | Mapping) -> dict[CellAddress, dict]:
    """Parse a factor file: {"factors": [{"cell", "min", "max", "name"?}]}.

    Returns a mapping cell -> entry; raises SchemaError on malformed input,
    including min > max.
    """
    if isinstance(document, (bytes, str)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"factor file is not valid JSON: {exc}") from None
    if not isinstance(document, dict) or not isinstance(document.get("factors"), list):
        raise SchemaError("factor file must be an object with a 'factors' array")
    out: dict[CellAddress, dict] = {}
    for entry in document["factors"]:
        if not isinstance(entry, dict) or "cell" not in entry:
            raise SchemaError("every factor entry needs a 'cell'")
        addr = parse_cell_text(entry["cell"])
        if addr.sheet == "":
            raise SchemaError(f"factor cell {entry['cell']!r} must be sheet-qualified")
        for key in ("min", "max"):
            if not isinstance(entry.get(key), (int, float)) or isinstance(entry.get(key), bool):
                raise SchemaError(f"factor {entry['cell']}: '{key}' must be a number")
        if entry["min"] > entry["max"]:
            raise SchemaError(
                f"factor {entry['cell']}: min {entry['min']} exceeds max {entry['max']}"
            )
        if addr in out:
            raise SchemaError(f"factor {entry['cell']} listed twice")
        name = entry.get("name")
        if name is not None and (not isinstance(name, str) or name == ""):
            raise SchemaError(f"factor {entry['cell']}: 'name' must be non-empty text")
        out[addr] = {"min": float(entry["min"]), "max": float(entry["max"]), "name": name}
    return out


def identify_variable_inputs(
    s: ModelSlice, factors: Mapping[CellAddress, dict] | None = None
) -> list[FactorSpec]:
    """List the numeric-literal inputs of a slice as factor candidates.

    With no factor file every numeric input is returned with its range
    flagged missing (and therefore fixed). With one, listed inputs become
    variable with the given range; unlisted inputs are fixed. Listing a cell
    that is not a numeric input of the slice raises FactorTargetError.
    """
    wb = s.workbook
    numeric_inputs: dict[CellAddress, float] = {}
    for addr in s.inputs:
        cell = wb.get_cell(addr)
        if cell is not None and type(cell.content.value) is float:
            numeric_inputs[addr] = cell.content.value

    if factors:
        for addr in factors:
            if addr not in numeric_inputs:
                raise FactorTargetError(
                    f"factor {addr} is not a numeric input of the slice"
                )

    def make(addr: CellAddress) -> FactorSpec:
        cell = wb.get_cell(addr)
        label = cell.label if cell and cell.label else str(addr)
        entry = factors.get(addr) if factors else None
        if entry is None:
            return FactorSpec(addr, label, None, None, s.graph.discipline_of(addr), False)
        name = entry.get("name") or label
        lo, hi = float(entry["min"]), float(entry["max"])
        return FactorSpec(addr, name, lo, hi, s.graph.discipline_of(addr), lo < hi)

    listed = list(factors) if factors else []
    rest = sorted((a for a in numeric_inputs if a not in set(listed)), key=lambda a: a.sort_key)
    return [make(a) for a in listed + rest]
