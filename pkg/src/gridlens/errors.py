"""Exception types shared across the toolkit."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .addresses import CellAddress


class GridLensError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(GridLensError):
    """A document does not conform to its interchange schema."""


class AddressError(SchemaError):
    """A cell or range reference string could not be parsed."""


class DuplicateSheetError(SchemaError):
    """A workbook document declares the same sheet name twice."""


class FormulaParseError(GridLensError):
    """A formula failed to lex or parse.

    Attributes:
        offset: 0-based character offset into the formula text (counting the
            leading ``=``) where the problem was detected.
        expected: description of what would have been accepted at the offset.
        location: ``Sheet!A1`` of the owning cell, filled in by the loader.
    """

    def __init__(
        self,
        message: str,
        offset: int,
        expected: str | None = None,
        location: str | None = None,
    ):
        self.offset = offset
        self.expected = expected
        self.location = location
        prefix = f"{location}: " if location else ""
        super().__init__(f"{prefix}{message} (offset {offset})")

    def at_location(self, location: str) -> "FormulaParseError":
        """Return a copy of this error annotated with the owning cell."""
        return FormulaParseError(
            self.args[0].rsplit(" (offset", 1)[0],
            self.offset,
            expected=self.expected,
            location=location,
        )


class CycleError(GridLensError):
    """The calculation graph contains a circular reference.

    ``cycle`` lists the addresses of one cycle, in reference order.
    """

    def __init__(self, cycle: "list[CellAddress]"):
        self.cycle = cycle
        chain = " -> ".join(str(a) for a in cycle)
        super().__init__(f"circular reference: {chain}")


class OverlayTargetError(GridLensError):
    """A scenario override targets a formula cell instead of an input."""


class UnknownKpiError(GridLensError):
    """A requested KPI cell is not a node of the calculation graph."""

    def __init__(self, address: "CellAddress"):
        self.address = address
        super().__init__(f"unknown KPI cell: {address}")


class EmptySliceError(GridLensError):
    """A metric was requested on a slice with no nodes."""


class FactorTargetError(GridLensError):
    """A factor file names a cell that is not an input of the slice."""


class UnsupportedSizeError(GridLensError):
    """Requested factor count exceeds the largest configured design size."""


class DesignMismatchError(GridLensError):
    """Factors, design columns, and responses do not line up."""


class IncompleteRunsError(GridLensError):
    """Effect estimation was attempted with failed scenario runs present."""

    def __init__(self, failed_runs):
        self.failed_runs = list(failed_runs)
        runs = ", ".join(f"run {i} ({kind.name})" for i, kind in self.failed_runs)
        super().__init__(f"cannot estimate effects with failed runs: {runs}")


class UnknownFormatError(GridLensError):
    """An unsupported report format was requested."""
