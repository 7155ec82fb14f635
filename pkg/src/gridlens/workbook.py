"""Workbook domain model, JSON interchange loading, and validation.

The canonical input is a JSON workbook document::

    { "sheets": [ { "name": str,
                    "cells": [ { "addr": "A1",
                                 "value": number|string|bool  XOR  "formula": "=...",
                                 "label": str? } ] } ],
      "definedNames": { str: "Sheet!A1" | "Sheet!A1:B9" }?,
      "disciplines": { sheetName: disciplineName }? }

Text values and formulas are disambiguated by key, never by a leading ``=``
inside ``value``. Workbooks are immutable after load and safe to share
across concurrent readers.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from .addresses import CellAddress, CellRange, RefTarget, parse_a1, parse_target_text
from .errors import DuplicateSheetError, FormulaParseError, SchemaError
from .formula import (
    BoolLit,
    FormulaAst,
    FunctionCall,
    NumberLit,
    RangeRef,
    extract_references,
    parse_formula,
    serialize_formula,
    walk,
)
from .values import Value


@dataclass(frozen=True, slots=True)
class LiteralContent:
    value: Value


@dataclass(frozen=True, slots=True)
class FormulaContent:
    text: str
    ast: FormulaAst


CellContent = Union[LiteralContent, FormulaContent]


@dataclass(frozen=True, slots=True)
class Cell:
    address: CellAddress
    content: CellContent
    label: str | None = None

    @property
    def is_formula(self) -> bool:
        return type(self.content) is FormulaContent


@dataclass
class Sheet:
    name: str
    cells: dict[CellAddress, Cell] = field(default_factory=dict)


@dataclass
class Workbook:
    """An ordered collection of sheets plus name and discipline maps.

    Every sheet belongs to exactly one discipline; the default mapping is
    the sheet name itself.
    """

    sheets: list[Sheet] = field(default_factory=list)
    defined_names: dict[str, RefTarget] = field(default_factory=dict)
    disciplines: dict[str, str] = field(default_factory=dict)

    @property
    def sheet_names(self) -> list[str]:
        return [s.name for s in self.sheets]

    def has_sheet(self, name: str) -> bool:
        return any(s.name == name for s in self.sheets)

    def get_sheet(self, name: str) -> Sheet | None:
        for s in self.sheets:
            if s.name == name:
                return s
        return None

    def get_cell(self, address: CellAddress) -> Cell | None:
        sheet = self.get_sheet(address.sheet)
        return sheet.cells.get(address) if sheet else None

    def iter_cells(self) -> Iterator[Cell]:
        for sheet in self.sheets:
            yield from sheet.cells.values()

    def formula_cells(self) -> Iterator[Cell]:
        for cell in self.iter_cells():
            if cell.is_formula:
                yield cell

    def discipline_of(self, sheet_name: str) -> str:
        return self.disciplines.get(sheet_name, sheet_name)


# --------------------------------------------------------------------------
# Loading
# --------------------------------------------------------------------------


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SchemaError(message)


def _load_value(raw, where: str) -> Value:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        return raw
    raise SchemaError(f"{where}: 'value' must be a number, string, or boolean")


def _load_cell(raw, sheet_name: str) -> Cell:
    _require(isinstance(raw, dict), f"sheet {sheet_name!r}: cell entries must be objects")
    _require("addr" in raw, f"sheet {sheet_name!r}: cell entry missing 'addr'")
    addr_text = raw["addr"]
    _require(isinstance(addr_text, str), f"sheet {sheet_name!r}: 'addr' must be a string")
    column, row = parse_a1(addr_text)
    address = CellAddress(sheet_name, column, row)
    where = str(address)

    has_value = "value" in raw
    has_formula = "formula" in raw
    _require(
        has_value != has_formula,
        f"{where}: exactly one of 'value' or 'formula' is required",
    )
    content: CellContent
    if has_formula:
        text = raw["formula"]
        _require(isinstance(text, str), f"{where}: 'formula' must be a string")
        _require(text.startswith("="), f"{where}: formula text must begin with '='")
        try:
            ast = parse_formula(text, default_sheet=sheet_name)
        except FormulaParseError as exc:
            raise exc.at_location(where) from None
        content = FormulaContent(text, ast)
    else:
        content = LiteralContent(_load_value(raw["value"], where))

    label = raw.get("label")
    if label is not None:
        _require(isinstance(label, str) and label != "", f"{where}: 'label' must be non-empty text")
    return Cell(address, content, label)


def load_workbook(document: bytes | str | Mapping) -> Workbook:
    """Load and validate a workbook interchange document.

    Accepts raw JSON bytes/text or an already-decoded mapping. All formulas
    are parsed eagerly; references to sheets that do not exist are permitted
    (they read as blank and are reported by :func:`validate_workbook`).

    Raises:
        SchemaError: malformed document.
        DuplicateSheetError: repeated sheet name.
        FormulaParseError: unparseable formula, annotated with its cell.
    """
    if isinstance(document, (bytes, str)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from None
    _require(isinstance(document, dict), "workbook document must be a JSON object")
    _require("sheets" in document, "workbook document missing 'sheets'")
    raw_sheets = document["sheets"]
    _require(isinstance(raw_sheets, list), "'sheets' must be an array")

    wb = Workbook()
    for raw_sheet in raw_sheets:
        _require(isinstance(raw_sheet, dict), "sheet entries must be objects")
        name = raw_sheet.get("name")
        _require(isinstance(name, str) and name != "", "every sheet needs a non-empty 'name'")
        if wb.has_sheet(name):
            raise DuplicateSheetError(f"duplicate sheet name: {name!r}")
        sheet = Sheet(name)
        for raw_cell in raw_sheet.get("cells", []):
            cell = _load_cell(raw_cell, name)
            _require(
                cell.address not in sheet.cells,
                f"{cell.address}: duplicate cell address",
            )
            sheet.cells[cell.address] = cell
        wb.sheets.append(sheet)

    for name, target_text in (document.get("definedNames") or {}).items():
        _require(isinstance(name, str) and name != "", "defined names must be non-empty strings")
        _require(
            isinstance(target_text, str),
            f"defined name {name!r}: target must be a reference string",
        )
        target = parse_target_text(target_text)
        _require(
            target.sheet != "",
            f"defined name {name!r}: target must be sheet-qualified",
        )
        wb.defined_names[name] = target

    disciplines = document.get("disciplines") or {}
    for sheet_name, discipline in disciplines.items():
        _require(
            wb.has_sheet(sheet_name),
            f"disciplines map names unknown sheet {sheet_name!r}",
        )
        _require(
            isinstance(discipline, str) and discipline != "",
            f"discipline for sheet {sheet_name!r} must be non-empty text",
        )
    wb.disciplines = {s.name: disciplines.get(s.name, s.name) for s in wb.sheets}
    return wb


def workbook_to_document(wb: Workbook) -> dict:
    """Serialize a workbook back to the interchange schema.

    Formula text is emitted in normalized form, so load -> save -> load is a
    fixed point.
    """
    doc: dict = {"sheets": []}
    for sheet in wb.sheets:
        cells = []
        for cell in sheet.cells.values():
            entry: dict = {"addr": cell.address.a1}
            if cell.is_formula:
                entry["formula"] = serialize_formula(cell.content.ast)
            else:
                v = cell.content.value
                if type(v) is float and v == int(v) and abs(v) < 1e16:
                    entry["value"] = int(v)
                else:
                    entry["value"] = v
            if cell.label is not None:
                entry["label"] = cell.label
            cells.append(entry)
        doc["sheets"].append({"name": sheet.name, "cells": cells})
    if wb.defined_names:
        doc["definedNames"] = {name: str(target) for name, target in wb.defined_names.items()}
    non_default = {s: d for s, d in wb.disciplines.items() if d != s}
    if non_default:
        doc["disciplines"] = dict(wb.disciplines)
    return doc


def save_workbook(wb: Workbook) -> bytes:
    return json.dumps(workbook_to_document(wb), indent=2).encode("utf-8")


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True, slots=True)
class Finding:
    severity: Severity
    kind: str
    location: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def is_clean(self) -> bool:
        return not self.findings

    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.ERROR]


def _approximate_lookup_vectors(wb: Workbook, ast: FormulaAst):
    """Yield (call name, key vector addresses) for approximate-mode lookups
    whose mode is statically known."""
    for node in walk(ast):
        if type(node) is not FunctionCall:
            continue
        if node.name in ("VLOOKUP", "HLOOKUP") and len(node.args) >= 3:
            mode = node.args[3] if len(node.args) > 3 else None
            if mode is not None and (
                mode == BoolLit(False) or mode == NumberLit(0.0)
            ):
                continue
            if mode is not None and type(mode) not in (BoolLit, NumberLit):
                continue  # mode not statically known
            table = node.args[1]
            if type(table) is RangeRef:
                rows = table.cells.address_rows()
                if node.name == "VLOOKUP":
                    yield node.name, [r[0] for r in rows]
                else:
                    yield node.name, rows[0]
        elif node.name == "MATCH" and len(node.args) >= 2:
            mode = node.args[2] if len(node.args) > 2 else None
            if mode is not None and mode != NumberLit(1.0):
                continue
            vector = node.args[1]
            if type(vector) is RangeRef:
                yield node.name, list(vector.cells.addresses())


def validate_workbook(wb: Workbook) -> ValidationReport:
    """Collect findings about a loaded workbook; never raises.

    Findings cover references to unknown sheets, unsupported or unknown
    function names, unresolved defined names, cell labels shadowing defined
    names, and approximate-mode lookup tables that are visibly unsorted.
    """
    from .engine import SUPPORTED_FUNCTIONS  # deferred: engine imports this module

    report = ValidationReport()
    folded_names = {n.casefold() for n in wb.defined_names}

    for cell in wb.formula_cells():
        where = str(cell.address)
        ast = cell.content.ast
        refs = extract_references(ast, wb.defined_names)

        seen_sheets: set[str] = set()
        for target in list(refs.cells) + list(refs.ranges):
            sheet = target.sheet if isinstance(target, CellRange) else target.sheet
            if sheet and not wb.has_sheet(sheet) and sheet not in seen_sheets:
                seen_sheets.add(sheet)
                report.findings.append(
                    Finding(
                        Severity.ERROR,
                        "unknown-sheet",
                        where,
                        f"reference to unknown sheet {sheet!r}",
                    )
                )
        for name in refs.unresolved_names:
            report.findings.append(
                Finding(
                    Severity.ERROR,
                    "unknown-name",
                    where,
                    f"formula uses undefined name {name!r}",
                )
            )
        for fname in sorted({n for n in _collect_function_names(ast)}):
            if fname not in SUPPORTED_FUNCTIONS:
                report.findings.append(
                    Finding(
                        Severity.WARNING,
                        "unknown-function",
                        where,
                        f"function {fname} is not supported by the evaluator",
                    )
                )
        for call_name, key_addresses in _approximate_lookup_vectors(wb, ast):
            keys = []
            for addr in key_addresses:
                member = wb.get_cell(addr)
                if member is None or member.is_formula:
                    keys = None
                    break
                v = member.content.value
                if type(v) is not float:
                    keys = None
                    break
                keys.append(v)
            if keys and any(a > b for a, b in zip(keys, keys[1:])):
                report.findings.append(
                    Finding(
                        Severity.WARNING,
                        "unsorted-lookup",
                        where,
                        f"approximate-mode {call_name} over a visibly unsorted table",
                    )
                )

    for cell in wb.iter_cells():
        if cell.label and cell.label.casefold() in folded_names:
            report.findings.append(
                Finding(
                    Severity.WARNING,
                    "label-collision",
                    str(cell.address),
                    f"cell label {cell.label!r} collides with a defined name",
                )
            )
    return report


def _collect_function_names(ast: FormulaAst) -> Iterator[str]:
    for node in walk(ast):
        if type(node) is FunctionCall:
            yield node.name
