"""gridlens: slice, measure, and stress-test spreadsheet-based models.

The toolkit loads a workbook interchange document, extracts the backward
slice of chosen KPI cells, evaluates it deterministically, computes
multidisciplinary metrics (per-discipline composition, coupling matrix,
afferent/efferent/instability), runs Plackett-Burman factor screening, and
exports the calculation graph for the interactive explorer.
"""

from .addresses import CellAddress, CellRange, parse_cell_text, parse_target_text
from .engine import EvaluationResult, Evaluator, ScenarioOverlay, call_builtin, evaluate
from .errors import (
    CycleError,
    DesignMismatchError,
    DuplicateSheetError,
    EmptySliceError,
    FactorTargetError,
    FormulaParseError,
    GridLensError,
    IncompleteRunsError,
    OverlayTargetError,
    SchemaError,
    UnknownFormatError,
    UnknownKpiError,
    UnsupportedSizeError,
)
from .export import (
    GraphExport,
    MetricsBundle,
    bundle_metrics,
    export_graph,
    load_export,
    load_slice,
    write_export,
    write_report,
    write_sensitivity_csv,
    write_slice,
)
from .formula import (
    FormulaAst,
    RefContext,
    ReferenceSet,
    extract_references,
    parse_formula,
    serialize_formula,
)
from .metrics import (
    CouplingMatrix,
    CouplingMetricsRow,
    DisciplineMetricsRow,
    EvolutionReport,
    ModelSnapshot,
    average_valency,
    compare_models,
    compare_snapshots,
    coupling_matrix,
    coupling_metrics,
    discipline_metrics,
    function_histogram,
    global_valency,
    quadrant_findings,
    snapshot,
    top_referenced,
)
from .sensitivity import (
    PBDesign,
    ResponseMatrix,
    SensitivityReport,
    estimate_effects,
    normalize_effects,
    pb_design,
    run_experiments,
)
from .slicing import (
    DependencyGraph,
    FactorSpec,
    ModelSlice,
    build_graph,
    identify_variable_inputs,
    load_factor_file,
    slice_model,
)
from .values import CellError, ErrorKind, Value
from .workbook import (
    Cell,
    Finding,
    Severity,
    ValidationReport,
    Workbook,
    load_workbook,
    save_workbook,
    validate_workbook,
    workbook_to_document,
)

__version__ = "0.1.0"
