"""Cell values: numbers, text, booleans, blanks, and error markers.

Values are represented with native Python types for speed: ``float`` for
numbers, ``str`` for text, ``bool`` for booleans, ``None`` for blank, and
:class:`CellError` for spreadsheet errors. Numbers are always finite doubles;
overflow and domain failures are mapped to VALUE errors at evaluation time so
NaN and infinity never appear in results.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union


class ErrorKind(enum.Enum):
    """The closed set of spreadsheet error kinds."""

    DIV0 = "#DIV/0!"
    NA = "#N/A"
    VALUE = "#VALUE!"
    REF = "#REF!"
    NAME = "#NAME?"
    CYCLE = "#CYCLE!"

    @property
    def code(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class CellError:
    """An error value propagating through the calculation."""

    kind: ErrorKind

    def __str__(self) -> str:
        return self.kind.code


Value = Union[float, str, bool, None, CellError]

# Interned error instances; errors carry no payload so one per kind suffices.
DIV0_ERROR = CellError(ErrorKind.DIV0)
NA_ERROR = CellError(ErrorKind.NA)
VALUE_ERROR = CellError(ErrorKind.VALUE)
REF_ERROR = CellError(ErrorKind.REF)
NAME_ERROR = CellError(ErrorKind.NAME)
CYCLE_ERROR = CellError(ErrorKind.CYCLE)

_BY_KIND = {e.kind: e for e in (DIV0_ERROR, NA_ERROR, VALUE_ERROR, REF_ERROR, NAME_ERROR, CYCLE_ERROR)}


def error(kind: ErrorKind) -> CellError:
    return _BY_KIND[kind]


def is_error(v: Value) -> bool:
    return type(v) is CellError


def is_number(v: Value) -> bool:
    return type(v) is float


def is_text(v: Value) -> bool:
    return type(v) is str


def is_blank(v: Value) -> bool:
    return v is None


def number_to_text(x: float) -> str:
    """Render a number the way a spreadsheet displays it in text contexts."""
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def format_value(v: Value) -> str:
    """Human-readable rendering of any value."""
    if v is None:
        return ""
    t = type(v)
    if t is bool:
        return "TRUE" if v else "FALSE"
    if t is float:
        return number_to_text(v)
    if t is CellError:
        return v.kind.code
    return str(v)


def value_to_jsonable(v: Value):
    """Encode a value for JSON artifacts; errors become {"error": kind}."""
    if type(v) is CellError:
        return {"error": v.kind.name}
    if type(v) is float and v == int(v) and abs(v) < 1e16:
        return int(v)
    return v


def value_from_jsonable(obj) -> Value:
    """Decode a value from JSON artifacts (inverse of value_to_jsonable)."""
    if isinstance(obj, dict) and "error" in obj:
        return error(ErrorKind[obj["error"]])
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, float)):
        return float(obj)
    raise ValueError(f"not a cell value: {obj!r}")
