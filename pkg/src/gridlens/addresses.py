"""Cell addresses, rectangular ranges, and A1-notation text handling.

Addresses are position-based: absolute markers (``$A$1``) are accepted on
input and discarded, since dependency analysis cares about positions only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import AddressError

_A1_RE = re.compile(r"^\$?([A-Za-z]{1,3})\$?([0-9]+)$")
_PLAIN_SHEET_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def letters_to_column(letters: str) -> int:
    """Convert column letters to a 1-based index (A=1, Z=26, AA=27)."""
    column = 0
    for ch in letters.upper():
        column = column * 26 + (ord(ch) - ord("A") + 1)
    return column


def column_to_letters(column: int) -> str:
    """Convert a 1-based column index back to letters."""
    if column < 1:
        raise AddressError(f"column index must be >= 1, got {column}")
    letters = ""
    while column:
        column, rem = divmod(column - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return letters


@dataclass(frozen=True, slots=True)
class CellAddress:
    """A single cell position: sheet name plus 1-based column and row."""

    sheet: str
    column: int
    row: int

    def __post_init__(self):
        if self.column < 1 or self.row < 1:
            raise AddressError(f"column and row must be >= 1, got {self.column},{self.row}")

    @property
    def a1(self) -> str:
        """The sheet-less A1 form, e.g. ``B12``."""
        return f"{column_to_letters(self.column)}{self.row}"

    @property
    def sort_key(self) -> tuple[str, int, int]:
        """Canonical ordering key: sheet name, then row, then column."""
        return (self.sheet, self.row, self.column)

    def __str__(self) -> str:
        return f"{self.sheet}!{self.a1}" if self.sheet else self.a1


@dataclass(frozen=True, slots=True)
class CellRange:
    """A rectangular run of cells on one sheet, normalized on construction."""

    start: CellAddress
    end: CellAddress

    def __post_init__(self):
        if self.start.sheet != self.end.sheet:
            raise AddressError(
                f"range endpoints must share a sheet: {self.start} vs {self.end}"
            )
        if self.start.column > self.end.column or self.start.row > self.end.row:
            start = CellAddress(
                self.start.sheet,
                min(self.start.column, self.end.column),
                min(self.start.row, self.end.row),
            )
            end = CellAddress(
                self.start.sheet,
                max(self.start.column, self.end.column),
                max(self.start.row, self.end.row),
            )
            object.__setattr__(self, "start", start)
            object.__setattr__(self, "end", end)

    @property
    def sheet(self) -> str:
        return self.start.sheet

    @property
    def width(self) -> int:
        return self.end.column - self.start.column + 1

    @property
    def height(self) -> int:
        return self.end.row - self.start.row + 1

    @property
    def member_count(self) -> int:
        return self.width * self.height

    def addresses(self) -> Iterator[CellAddress]:
        """All member addresses, row-major."""
        for row in range(self.start.row, self.end.row + 1):
            for col in range(self.start.column, self.end.column + 1):
                yield CellAddress(self.sheet, col, row)

    def address_rows(self) -> list[list[CellAddress]]:
        """Member addresses as a rectangular grid of rows."""
        return [
            [
                CellAddress(self.sheet, col, row)
                for col in range(self.start.column, self.end.column + 1)
            ]
            for row in range(self.start.row, self.end.row + 1)
        ]

    def contains(self, address: CellAddress) -> bool:
        return (
            address.sheet == self.sheet
            and self.start.column <= address.column <= self.end.column
            and self.start.row <= address.row <= self.end.row
        )

    def __str__(self) -> str:
        prefix = f"{self.sheet}!" if self.sheet else ""
        return f"{prefix}{self.start.a1}:{self.end.a1}"


RefTarget = Union[CellAddress, CellRange]


def parse_a1(text: str) -> tuple[int, int]:
    """Parse a sheet-less A1 token into (column, row), ignoring $ markers."""
    m = _A1_RE.match(text)
    if not m:
        raise AddressError(f"not an A1 cell reference: {text!r}")
    return letters_to_column(m.group(1)), int(m.group(2))


def _split_sheet(text: str) -> tuple[str | None, str]:
    """Split an optional sheet prefix off a reference string."""
    if text.startswith("'"):
        end = 1
        while True:
            end = text.find("'", end)
            if end == -1:
                raise AddressError(f"unterminated quoted sheet name in {text!r}")
            if end + 1 < len(text) and text[end + 1] == "'":
                end += 2
                continue
            break
        if end + 1 >= len(text) or text[end + 1] != "!":
            raise AddressError(f"quoted sheet name must be followed by '!': {text!r}")
        sheet = text[1:end].replace("''", "'")
        return sheet, text[end + 2 :]
    if "!" in text:
        sheet, rest = text.split("!", 1)
        if not sheet:
            raise AddressError(f"empty sheet name in {text!r}")
        return sheet, rest
    return None, text


def parse_cell_text(text: str, default_sheet: str = "") -> CellAddress:
    """Parse ``A1``, ``Sheet!A1``, or ``'My Sheet'!A1`` into a CellAddress."""
    sheet, rest = _split_sheet(text.strip())
    column, row = parse_a1(rest)
    return CellAddress(sheet if sheet is not None else default_sheet, column, row)


def parse_target_text(text: str, default_sheet: str = "") -> RefTarget:
    """Parse a cell or range reference string (``Sheet!A1`` or ``Sheet!A1:B9``)."""
    sheet, rest = _split_sheet(text.strip())
    sheet_name = sheet if sheet is not None else default_sheet
    if ":" in rest:
        start_text, end_text = rest.split(":", 1)
        start_col, start_row = parse_a1(start_text)
        end_col, end_row = parse_a1(end_text)
        return CellRange(
            CellAddress(sheet_name, start_col, start_row),
            CellAddress(sheet_name, end_col, end_row),
        )
    column, row = parse_a1(rest)
    return CellAddress(sheet_name, column, row)


def quote_sheet_name(sheet: str) -> str:
    """Quote a sheet name for formula text unless it is a plain identifier."""
    if _PLAIN_SHEET_RE.match(sheet) and not _A1_RE.match(sheet):
        return sheet
    return "'" + sheet.replace("'", "''") + "'"
