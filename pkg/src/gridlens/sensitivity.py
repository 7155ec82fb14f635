"""Plackett-Burman screening designs and main-effect estimation.

A PB design varies k two-level factors over N runs, N ≡ 0 (mod 4), N > k,
with every column balanced (sum zero) and every pair of columns orthogonal
(dot product zero). Main effects are therefore estimated independently of
one another; the trade-off is that two-factor interactions alias onto main
effects, which an optional foldover (appending the sign-flipped design)
removes.

Construction: Sylvester-doubled Hadamard matrices with the constant column
dropped for power-of-two sizes, and the classical cyclic first-row
generators (plus a final all-minus row) for N in {12, 20, 24}. Columns
beyond the requested factor count are kept as dummy columns: they bind no
input, and their estimated "effects" gauge noise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from .addresses import CellAddress
from .engine import Evaluator, ScenarioOverlay
from .errors import (
    DesignMismatchError,
    IncompleteRunsError,
    UnknownKpiError,
    UnsupportedSizeError,
)
from .slicing import FactorSpec, ModelSlice
from .values import CellError, ErrorKind, Value

_CYCLIC_FIRST_ROWS = {
    12: "++-+++---+-",
    20: "++--++++-+-+----++-",
    24: "+++++-+-++--++--+-+----",
}
_POWER_SIZES = [4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096]
SUPPORTED_RUN_SIZES = sorted(_POWER_SIZES + list(_CYCLIC_FIRST_ROWS))
MAX_RUN_SIZE = SUPPORTED_RUN_SIZES[-1]


@dataclass
class PBDesign:
    """A two-level screening design.

    ``rows`` holds the full N x (N-1) sign matrix (or 2N x (N-1) after a
    foldover); ``matrix`` exposes the first ``factors`` columns, the rest
    being dummy columns.
    """

    runs: int
    factors: int
    rows: list[list[int]]
    dummy_columns: int
    folded: bool = False

    @property
    def matrix(self) -> list[list[int]]:
        return [row[: self.factors] for row in self.rows]

    @property
    def dummy_matrix(self) -> list[list[int]]:
        return [row[self.factors :] for row in self.rows]

    def column(self, j: int) -> list[int]:
        return [row[j] for row in self.rows]


def _sylvester_rows(n: int) -> list[list[int]]:
    h = [[1]]
    while len(h) < n:
        h = [row + row for row in h] + [row + [-x for x in row] for row in h]
    # Drop the all-ones first column; the remaining columns are balanced.
    return [row[1:] for row in h]


def _cyclic_rows(n: int) -> list[list[int]]:
    signs = [1 if ch == "+" else -1 for ch in _CYCLIC_FIRST_ROWS[n]]
    width = n - 1
    rows = []
    for shift in range(width):
        rows.append([signs[(j - shift) % width] for j in range(width)])
    rows.append([-1] * width)
    return rows


def pb_design(k: int, foldover: bool = False) -> PBDesign:
    """Build the smallest supported design with more runs than factors.

    Raises UnsupportedSizeError when k cannot fit the largest configured
    size (N = 4096, i.e. k <= 4095).
    """
    if k < 1:
        raise ValueError("factor count must be >= 1")
    n = next((size for size in SUPPORTED_RUN_SIZES if size > k), None)
    if n is None:
        raise UnsupportedSizeError(
            f"{k} factors exceed the largest supported design ({MAX_RUN_SIZE} runs)"
        )
    rows = _cyclic_rows(n) if n in _CYCLIC_FIRST_ROWS else _sylvester_rows(n)
    if foldover:
        rows = rows + [[-x for x in row] for row in rows]
    return PBDesign(
        runs=len(rows),
        factors=k,
        rows=rows,
        dummy_columns=n - 1 - k,
        folded=foldover,
    )


@dataclass
class ResponseMatrix:
    """KPI responses of one experiment batch, ordered by run index.

    ``values[i]`` is None for failed runs, which are listed with their error
    kinds in ``failed_runs``. ``baseline`` holds the unmodified-inputs KPI
    values for practitioner context.
    """

    runs: int
    kpis: list[CellAddress]
    factors: list[FactorSpec]
    values: list[list[float] | None]
    failed_runs: list[tuple[int, ErrorKind]] = field(default_factory=list)
    baseline: dict[CellAddress, Value] = field(default_factory=dict)


def _coerce_response(v: Value) -> float | ErrorKind:
    t = type(v)
    if t is float:
        return v
    if t is bool:
        return 1.0 if v else 0.0
    if v is None:
        return 0.0
    if t is CellError:
        return v.kind
    return ErrorKind.VALUE


def run_experiments(
    s: ModelSlice,
    factors: Sequence[FactorSpec],
    design: PBDesign,
    kpis: Sequence[CellAddress] | None = None,
    jobs: int = 1,
) -> ResponseMatrix:
    """Evaluate the slice once per design row.

    Run i sets factor j to its maximum when matrix[i][j] is +1 and to its
    minimum otherwise; dummy columns bind no cell. Evaluation errors at a
    KPI are captured in ``failed_runs`` rather than raised. Rows are ordered
    by run index regardless of the degree of parallelism.
    """
    kpi_list = list(kpis) if kpis is not None else list(s.kpis)
    for kpi in kpi_list:
        if kpi not in s.kpis:
            raise UnknownKpiError(kpi)
    if len(factors) != design.factors:
        raise DesignMismatchError(
            f"{len(factors)} factors do not match the design's {design.factors} columns"
        )
    for f in factors:
        if not f.variable:
            raise DesignMismatchError(f"factor {f.cell} is not variable (range missing or zero-width)")
        if f.cell not in s.inputs:
            raise DesignMismatchError(f"factor {f.cell} is not an input of the slice")

    evaluator = Evaluator(s.workbook, scope=s.addresses)
    baseline = evaluator.run()
    baseline_values = {kpi: baseline.values.get(kpi) for kpi in kpi_list}

    matrix = design.matrix

    def run_one(i: int) -> list[float] | tuple[int, ErrorKind]:
        overrides = {
            f.cell: (f.maximum if matrix[i][j] > 0 else f.minimum)
            for j, f in enumerate(factors)
        }
        result = evaluator.run(ScenarioOverlay(overrides))
        row: list[float] = []
        for kpi in kpi_list:
            coerced = _coerce_response(result.values.get(kpi))
            if isinstance(coerced, ErrorKind):
                return (i, coerced)
            row.append(coerced)
        return row

    outcomes: list = [None] * design.runs
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for i, outcome in enumerate(pool.map(run_one, range(design.runs))):
                outcomes[i] = outcome
    else:
        for i in range(design.runs):
            outcomes[i] = run_one(i)

    values: list[list[float] | None] = []
    failed: list[tuple[int, ErrorKind]] = []
    for outcome in outcomes:
        if isinstance(outcome, tuple):
            failed.append(outcome)
            values.append(None)
        else:
            values.append(outcome)
    return ResponseMatrix(
        runs=design.runs,
        kpis=kpi_list,
        factors=list(factors),
        values=values,
        failed_runs=failed,
        baseline=baseline_values,
    )


@dataclass
class SensitivityReport:
    """Per-(factor, KPI) main effects.

    ``raw_effects[j][m]`` is the mean response of KPI m at factor j's maximum
    minus the mean at its minimum, in KPI units. ``normalized`` scales each
    KPI column to 100 at its most impactful factor (all zeros when no factor
    moves the KPI). ``dummy_effects`` are the same contrasts over the
    design's unassigned columns: a noise floor, excluded from normalization.
    """

    factors: list[FactorSpec]
    kpis: list[CellAddress]
    baseline: dict[CellAddress, Value]
    raw_effects: list[list[float]]
    dummy_effects: list[list[float]]
    normalized: list[list[float]] | None = None


def estimate_effects(design: PBDesign, responses: ResponseMatrix) -> SensitivityReport:
    """Estimate raw main effects: effect(j) = (2/N) * sum_i sign[i][j] * y_i.

    Requires a complete response matrix; any failed run aborts estimation
    (imputing responses would corrupt the contrasts).
    """
    if responses.failed_runs:
        raise IncompleteRunsError(responses.failed_runs)
    if responses.runs != design.runs or len(responses.values) != design.runs:
        raise DesignMismatchError(
            f"response matrix has {responses.runs} rows, design has {design.runs}"
        )
    factors = responses.factors
    if len(factors) != design.factors:
        raise DesignMismatchError(
            f"{len(factors)} factors do not match the design's {design.factors} columns"
        )

    n = design.runs
    m = len(responses.kpis)
    width = design.factors + design.dummy_columns

    sums = [[0.0] * m for _ in range(width)]
    for i, row in enumerate(design.rows):
        y = responses.values[i]
        for j in range(width):
            sign = row[j]
            col = sums[j]
            for q in range(m):
                col[q] += sign * y[q]
    effects = [[2.0 * sums[j][q] / n for q in range(m)] for j in range(width)]
    return SensitivityReport(
        factors=list(factors),
        kpis=list(responses.kpis),
        baseline=dict(responses.baseline),
        raw_effects=effects[: design.factors],
        dummy_effects=effects[design.factors :],
    )


def normalize_effects(report: SensitivityReport) -> SensitivityReport:
    """Scale effects per KPI to 100 at the most impactful factor.

    Signs are preserved in ``raw_effects``; the normalized score is the
    magnitude share. A KPI no factor moves gets all zeros.
    """
    if not report.raw_effects:
        return replace(report, normalized=[])
    m = len(report.kpis)
    normalized = [[0.0] * m for _ in report.raw_effects]
    for q in range(m):
        peak = max(abs(row[q]) for row in report.raw_effects)
        if peak == 0.0:
            continue
        for j, row in enumerate(report.raw_effects):
            normalized[j][q] = 100.0 * abs(row[q]) / peak
    return replace(report, normalized=normalized)
