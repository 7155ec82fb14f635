"""Deterministic workbook evaluation with spreadsheet-compatible semantics.

Each formula AST is compiled once into a closure over an environment dict
(address -> value); cells are then evaluated in topological order of the
reference graph, so results are independent of declaration order. Scenario
batches reuse the compiled form: one :class:`Evaluator` may run many overlays,
concurrently if desired, because runs share no mutable state.

Coercion rules: blank is 0 in arithmetic and "" in concatenation; TRUE is 1
and FALSE is 0 in arithmetic; numeric text coerces in arithmetic; text
comparison is case-insensitive. Errors propagate through every operator and
function except ISERROR (which reports them), TYPE (which classifies them),
and the untaken branch of IF. Arithmetic that leaves the finite-double domain
(overflow, 0/0 power cases) yields a VALUE error, so results never contain
NaN or infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_UP, Decimal, InvalidOperation
from typing import Callable, Iterable, Sequence

from .addresses import CellAddress, CellRange
from .errors import CycleError, OverlayTargetError
from .formula import (
    BinaryOp,
    BoolLit,
    CellRef,
    FormulaAst,
    FunctionCall,
    NameRef,
    NumberLit,
    RangeRef,
    TextLit,
    UnaryOp,
    extract_references,
)
from .values import (
    CYCLE_ERROR,
    DIV0_ERROR,
    NA_ERROR,
    NAME_ERROR,
    REF_ERROR,
    VALUE_ERROR,
    CellError,
    ErrorKind,
    Value,
    number_to_text,
)
from .workbook import Workbook

Env = dict  # CellAddress -> Value
Grid = list  # list[list[Value]]
Thunk = Callable[[Env], Value]


@dataclass
class EvaluationResult:
    """Values for every cell in scope plus error diagnostics."""

    values: dict[CellAddress, Value]
    diagnostics: list[tuple[CellAddress, ErrorKind]] = field(default_factory=list)


@dataclass(frozen=True)
class ScenarioOverlay:
    """Input replacements for one scenario run.

    Targets must be input (literal) cells, never formula cells.
    """

    overrides: dict[CellAddress, Value] = field(default_factory=dict)


# --------------------------------------------------------------------------
# Coercion helpers
# --------------------------------------------------------------------------


def _to_number(v: Value) -> float | CellError:
    t = type(v)
    if t is float:
        return v
    if t is bool:
        return 1.0 if v else 0.0
    if v is None:
        return 0.0
    if t is CellError:
        return v
    if t is str:
        try:
            return float(v.strip())
        except ValueError:
            return VALUE_ERROR
    return VALUE_ERROR


def _to_text(v: Value) -> str | CellError:
    t = type(v)
    if t is str:
        return v
    if t is bool:
        return "TRUE" if v else "FALSE"
    if t is float:
        return number_to_text(v)
    if v is None:
        return ""
    if t is CellError:
        return v
    return VALUE_ERROR


def _to_condition(v: Value) -> bool | CellError:
    t = type(v)
    if t is bool:
        return v
    if t is float:
        return v != 0.0
    if v is None:
        return False
    if t is CellError:
        return v
    return VALUE_ERROR


_TYPE_RANK = {float: 0, str: 1, bool: 2}


def _compare(a: Value, b: Value) -> int:
    """Spreadsheet total order: numbers < text < booleans.

    Blank coerces to the other side's zero value (0, "", or FALSE); text
    comparison is case-insensitive. Callers must filter errors first.
    """
    if a is None and b is None:
        return 0
    if a is None:
        a = 0.0 if type(b) is float else "" if type(b) is str else False
    elif b is None:
        b = 0.0 if type(a) is float else "" if type(a) is str else False
    ra, rb = _TYPE_RANK[type(a)], _TYPE_RANK[type(b)]
    if ra != rb:
        return -1 if ra < rb else 1
    if type(a) is str:
        a, b = a.casefold(), b.casefold()
    return -1 if a < b else (1 if a > b else 0)


def _finite(x: float) -> float | CellError:
    return x if math.isfinite(x) else VALUE_ERROR


# --------------------------------------------------------------------------
# Built-in functions
#
# Each builtin receives fully evaluated arguments: scalars are Values, range
# arguments arrive as Grid (list of rows). The first error found while
# scanning arguments propagates, except where a function's contract says
# otherwise (ISERROR, TYPE).
# --------------------------------------------------------------------------


def _scan_error(args: Iterable) -> CellError | None:
    for a in args:
        if type(a) is CellError:
            return a
        if type(a) is list:
            for row in a:
                for v in row:
                    if type(v) is CellError:
                        return v
    return None


def _iter_numbers(args: Iterable) -> list[float] | CellError:
    """Numbers contributed by builtin arguments: grid members that are
    numeric count (text/bool/blank members are skipped, errors propagate);
    scalar arguments are coerced."""
    out: list[float] = []
    for a in args:
        if type(a) is list:
            for row in a:
                for v in row:
                    tv = type(v)
                    if tv is float:
                        out.append(v)
                    elif tv is CellError:
                        return v
        else:
            n = _to_number(a)
            if type(n) is CellError:
                return n
            out.append(n)
    return out


def _fn_sum(args: list) -> Value:
    nums = _iter_numbers(args)
    if type(nums) is CellError:
        return nums
    return _finite(math.fsum(nums))


def _fn_min(args: list) -> Value:
    nums = _iter_numbers(args)
    if type(nums) is CellError:
        return nums
    return min(nums) if nums else 0.0


def _fn_max(args: list) -> Value:
    nums = _iter_numbers(args)
    if type(nums) is CellError:
        return nums
    return max(nums) if nums else 0.0


def _fn_average(args: list) -> Value:
    nums = _iter_numbers(args)
    if type(nums) is CellError:
        return nums
    if not nums:
        return DIV0_ERROR
    return _finite(math.fsum(nums) / len(nums))


def _fn_abs(args: list) -> Value:
    n = _to_number(args[0])
    if type(n) is CellError:
        return n
    return abs(n)


def _fn_roundup(args: list) -> Value:
    n = _to_number(args[0])
    if type(n) is CellError:
        return n
    digits = 0.0
    if len(args) > 1:
        digits = _to_number(args[1])
        if type(digits) is CellError:
            return digits
    try:
        quantum = Decimal(1).scaleb(-int(digits))
        result = float(Decimal(repr(n)).quantize(quantum, rounding=ROUND_UP))
    except (InvalidOperation, OverflowError, ValueError):
        return VALUE_ERROR
    return _finite(result)


def _fn_iserror(args: list) -> Value:
    if type(args[0]) is list:
        return VALUE_ERROR
    return type(args[0]) is CellError


def _fn_isnumber(args: list) -> Value:
    v = args[0]
    if type(v) is CellError:
        return v
    if type(v) is list:
        return VALUE_ERROR
    return type(v) is float


def _fn_type(args: list) -> Value:
    v = args[0]
    t = type(v)
    if t is CellError:
        return 16.0
    if t is float or v is None:
        return 1.0
    if t is str:
        return 2.0
    if t is bool:
        return 4.0
    return VALUE_ERROR


def _fn_and(args: list) -> Value:
    err = _scan_error(args)
    if err is not None:
        return err
    truths: list[bool] = []
    for a in args:
        if type(a) is list:
            for row in a:
                for v in row:
                    t = type(v)
                    if t is bool:
                        truths.append(v)
                    elif t is float:
                        truths.append(v != 0.0)
        else:
            t = type(a)
            if t is bool:
                truths.append(a)
            elif t is float:
                truths.append(a != 0.0)
            elif a is None:
                continue
            else:
                return VALUE_ERROR
    if not truths:
        return VALUE_ERROR
    return all(truths)


def _as_vector(arg) -> list[Value] | None:
    """Flatten a single-row or single-column grid; None if not a vector."""
    if type(arg) is not list:
        return None
    if len(arg) == 1:
        return list(arg[0])
    if all(len(row) == 1 for row in arg):
        return [row[0] for row in arg]
    return None


def _match_position(key: Value, vector: Sequence[Value], exact: bool) -> int | None:
    """1-based position per lookup rules; None when nothing matches.

    Exact mode returns the first equal entry. Approximate mode assumes an
    ascending vector and returns the last entry <= key; entries of a
    different type class than the key are skipped.
    """
    key_rank = _TYPE_RANK.get(type(key))
    best = None
    for i, v in enumerate(vector):
        if v is None or _TYPE_RANK.get(type(v)) != key_rank:
            continue
        c = _compare(v, key)
        if exact:
            if c == 0:
                return i + 1
        elif c <= 0:
            best = i + 1
    return best


def _fn_match(args: list) -> Value:
    key = args[0]
    if type(key) is CellError:
        return key
    vector = _as_vector(args[1])
    if vector is None:
        return NA_ERROR
    err = _scan_error([args[1]])
    if err is not None:
        return err
    exact = False
    if len(args) > 2:
        mode = _to_number(args[2])
        if type(mode) is CellError:
            return mode
        if mode == 0.0:
            exact = True
        elif mode != 1.0:
            return VALUE_ERROR
    pos = _match_position(key, vector, exact)
    return float(pos) if pos is not None else NA_ERROR


def _lookup(args: list, by_row: bool) -> Value:
    key = args[0]
    if type(key) is CellError:
        return key
    table = args[1]
    if type(table) is not list or not table:
        return VALUE_ERROR
    err = _scan_error([table])
    if err is not None:
        return err
    index = _to_number(args[2])
    if type(index) is CellError:
        return index
    index = int(index)
    if index < 1:
        return VALUE_ERROR
    exact = False
    if len(args) > 3:
        mode = _to_condition(args[3])
        if type(mode) is CellError:
            return mode
        exact = not mode
    if by_row:
        keys = [row[0] for row in table]
        if index > len(table[0]):
            return REF_ERROR
    else:
        keys = list(table[0])
        if index > len(table):
            return REF_ERROR
    pos = _match_position(key, keys, exact)
    if pos is None:
        return NA_ERROR
    return table[pos - 1][index - 1] if by_row else table[index - 1][pos - 1]


def _fn_vlookup(args: list) -> Value:
    return _lookup(args, by_row=True)


def _fn_hlookup(args: list) -> Value:
    return _lookup(args, by_row=False)


_CRITERIA_OPS = ("<=", ">=", "<>", "=", "<", ">")


def _parse_criteria(criteria: Value) -> tuple[str, Value] | CellError:
    t = type(criteria)
    if t is CellError:
        return criteria
    if t is list:
        return VALUE_ERROR
    if t is not str:
        return ("=", criteria)
    op = "="
    rest = criteria
    for candidate in _CRITERIA_OPS:
        if criteria.startswith(candidate):
            op, rest = candidate, criteria[len(candidate) :]
            break
    try:
        operand: Value = float(rest.strip())
    except ValueError:
        operand = rest
    return (op, operand)


def _criteria_match(entry: Value, op: str, operand: Value) -> bool:
    """Match one range entry against a parsed criterion.

    Comparisons apply within one type class (numbers with numbers, text with
    text, case-insensitively); blanks match only an explicit blank equality.
    ``<>`` matches everything the corresponding ``=`` would not.
    """
    if op == "<>":
        if operand is None:
            return entry is not None
        if entry is None or type(entry) is CellError:
            return False
        return not _criteria_match(entry, "=", operand)
    if operand is None:
        return entry is None if op == "=" else False
    if entry is None or type(entry) is CellError:
        return False
    if _TYPE_RANK.get(type(entry)) != _TYPE_RANK.get(type(operand)):
        return False
    c = _compare(entry, operand)
    if op == "=":
        return c == 0
    if op == "<":
        return c < 0
    if op == "<=":
        return c <= 0
    if op == ">":
        return c > 0
    return c >= 0


def _fn_sumif(args: list) -> Value:
    test_range = args[0]
    if type(test_range) is not list:
        return VALUE_ERROR
    err = _scan_error([test_range])
    if err is not None:
        return err
    parsed = _parse_criteria(args[1])
    if type(parsed) is CellError:
        return parsed
    op, operand = parsed
    sum_range = test_range
    if len(args) > 2:
        sum_range = args[2]
        if type(sum_range) is not list:
            return VALUE_ERROR
        err = _scan_error([sum_range])
        if err is not None:
            return err
        if len(sum_range) != len(test_range) or any(
            len(a) != len(b) for a, b in zip(sum_range, test_range)
        ):
            return VALUE_ERROR
    total = 0.0
    for test_row, sum_row in zip(test_range, sum_range):
        for test_v, sum_v in zip(test_row, sum_row):
            if _criteria_match(test_v, op, operand) and type(sum_v) is float:
                total += sum_v
    return _finite(total)


@dataclass(frozen=True)
class BuiltinSpec:
    func: Callable[[list], Value]
    min_args: int
    max_args: int  # -1 for unbounded
    range_args: frozenset[int] | None = None  # None: every arg may be a range


_NO_RANGES: frozenset[int] = frozenset()

SUPPORTED_FUNCTIONS: dict[str, BuiltinSpec] = {
    "SUM": BuiltinSpec(_fn_sum, 1, -1),
    "IF": BuiltinSpec(None, 2, 3, _NO_RANGES),  # compiled lazily, see below
    "MATCH": BuiltinSpec(_fn_match, 2, 3, frozenset([1])),
    "HLOOKUP": BuiltinSpec(_fn_hlookup, 3, 4, frozenset([1])),
    "VLOOKUP": BuiltinSpec(_fn_vlookup, 3, 4, frozenset([1])),
    "ROUNDUP": BuiltinSpec(_fn_roundup, 1, 2, _NO_RANGES),
    "ISERROR": BuiltinSpec(_fn_iserror, 1, 1, _NO_RANGES),
    "SUMIF": BuiltinSpec(_fn_sumif, 2, 3, frozenset([0, 2])),
    "AND": BuiltinSpec(_fn_and, 1, -1),
    "ISNUMBER": BuiltinSpec(_fn_isnumber, 1, 1, _NO_RANGES),
    "TYPE": BuiltinSpec(_fn_type, 1, 1, _NO_RANGES),
    "MIN": BuiltinSpec(_fn_min, 1, -1),
    "MAX": BuiltinSpec(_fn_max, 1, -1),
    "AVERAGE": BuiltinSpec(_fn_average, 1, -1),
    "ABS": BuiltinSpec(_fn_abs, 1, 1, _NO_RANGES),
}


def call_builtin(name: str, args: list) -> Value:
    """Invoke one supported function on already-evaluated arguments.

    Range arguments are passed as grids (lists of row lists). Unknown names
    yield a NAME error; bad arity yields a VALUE error.
    """
    spec = SUPPORTED_FUNCTIONS.get(name.upper())
    if spec is None:
        return NAME_ERROR
    if len(args) < spec.min_args or (spec.max_args != -1 and len(args) > spec.max_args):
        return VALUE_ERROR
    if name.upper() == "IF":
        cond = _to_condition(args[0])
        if type(cond) is CellError:
            return cond
        if cond:
            return args[1]
        return args[2] if len(args) > 2 else False
    return spec.func(args)


# --------------------------------------------------------------------------
# Compiler
# --------------------------------------------------------------------------


def _compile_binary(op: str, lf: Thunk, rf: Thunk) -> Thunk:
    if op == "&":
        def concat(env):
            a = _to_text(lf(env))
            if type(a) is CellError:
                return a
            b = _to_text(rf(env))
            if type(b) is CellError:
                return b
            return a + b
        return concat

    if op in ("=", "<>", "<", "<=", ">", ">="):
        def compare(env):
            a = lf(env)
            if type(a) is CellError:
                return a
            b = rf(env)
            if type(b) is CellError:
                return b
            if type(a) is list or type(b) is list:
                return VALUE_ERROR
            c = _compare(a, b)
            if op == "=":
                return c == 0
            if op == "<>":
                return c != 0
            if op == "<":
                return c < 0
            if op == "<=":
                return c <= 0
            if op == ">":
                return c > 0
            return c >= 0
        return compare

    def arith(env):
        a = _to_number(lf(env))
        if type(a) is CellError:
            return a
        b = _to_number(rf(env))
        if type(b) is CellError:
            return b
        if op == "+":
            return _finite(a + b)
        if op == "-":
            return _finite(a - b)
        if op == "*":
            return _finite(a * b)
        if op == "/":
            if b == 0.0:
                return DIV0_ERROR
            return _finite(a / b)
        # "^": keep results inside the finite real domain.
        try:
            r = math.pow(a, b)
        except (ValueError, OverflowError):
            return VALUE_ERROR
        return _finite(r)

    return arith


class _Compiler:
    def __init__(self, defined_names):
        self.defined_names = {n.casefold(): t for n, t in (defined_names or {}).items()}

    def compile(self, node: FormulaAst, allow_range: bool = False) -> Thunk:
        t = type(node)
        if t is NumberLit:
            v = node.value
            return lambda env: v
        if t is TextLit:
            s = node.value
            return lambda env: s
        if t is BoolLit:
            b = node.value
            return lambda env: b
        if t is CellRef:
            addr = node.address
            return lambda env: env.get(addr)
        if t is RangeRef:
            if not allow_range:
                return lambda env: VALUE_ERROR
            rows = node.cells.address_rows()
            def grid(env):
                get = env.get
                return [[get(a) for a in row] for row in rows]
            return grid
        if t is NameRef:
            target = self.defined_names.get(node.name.casefold())
            if target is None:
                return lambda env: NAME_ERROR
            if isinstance(target, CellRange):
                return self.compile(RangeRef(target, True), allow_range)
            return self.compile(CellRef(target, True), allow_range)
        if t is UnaryOp:
            f = self.compile(node.operand)
            if node.op == "+":
                return f  # unary plus is identity, per spreadsheet convention
            def minus(env):
                n = _to_number(f(env))
                if type(n) is CellError:
                    return n
                return -n
            return minus
        if t is BinaryOp:
            return _compile_binary(node.op, self.compile(node.left), self.compile(node.right))
        if t is FunctionCall:
            return self.compile_call(node)
        raise TypeError(f"not a formula node: {node!r}")

    def compile_call(self, node: FunctionCall) -> Thunk:
        spec = SUPPORTED_FUNCTIONS.get(node.name)
        if spec is None:
            return lambda env: NAME_ERROR
        if len(node.args) < spec.min_args or (
            spec.max_args != -1 and len(node.args) > spec.max_args
        ):
            return lambda env: VALUE_ERROR
        if node.name == "IF":
            cond = self.compile(node.args[0])
            then = self.compile(node.args[1])
            other = self.compile(node.args[2]) if len(node.args) > 2 else (lambda env: False)
            def lazy_if(env):
                c = _to_condition(cond(env))
                if type(c) is CellError:
                    return c
                return then(env) if c else other(env)
            return lazy_if
        arg_fns = [
            self.compile(arg, allow_range=spec.range_args is None or i in spec.range_args)
            for i, arg in enumerate(node.args)
        ]
        func = spec.func
        def call(env):
            return func([f(env) for f in arg_fns])
        return call


# --------------------------------------------------------------------------
# Evaluator
# --------------------------------------------------------------------------


def _formula_dependencies(ast: FormulaAst, defined_names) -> set[CellAddress]:
    """Every cell address a formula reads, with ranges expanded."""
    deps: set[CellAddress] = set()
    refs = extract_references(ast, defined_names)
    for occ in refs.occurrences:
        if isinstance(occ.target, CellRange):
            deps.update(occ.target.addresses())
        else:
            deps.add(occ.target)
    return deps


class Evaluator:
    """Compiled form of one workbook (or slice scope), reusable across runs.

    The evaluator is immutable after construction; concurrent :meth:`run`
    calls are safe because each run owns its environment dict.
    """

    def __init__(
        self,
        workbook: Workbook,
        scope: set[CellAddress] | None = None,
        poison_cycles: bool = False,
    ):
        self.workbook = workbook
        compiler = _Compiler(workbook.defined_names)

        def in_scope(addr: CellAddress) -> bool:
            return scope is None or addr in scope

        self._literals: dict[CellAddress, Value] = {}
        formulas: dict[CellAddress, FormulaAst] = {}
        extra: set[CellAddress] = set()
        for cell in workbook.iter_cells():
            if not in_scope(cell.address):
                continue
            if cell.is_formula:
                formulas[cell.address] = cell.content.ast
            else:
                self._literals[cell.address] = cell.content.value
        self._formula_addresses = set(formulas)

        deps: dict[CellAddress, set[CellAddress]] = {}
        for addr, ast in formulas.items():
            d = {a for a in _formula_dependencies(ast, workbook.defined_names) if in_scope(a)}
            deps[addr] = {a for a in d if a in formulas}
            extra.update(a for a in d if a not in formulas and a not in self._literals)
        # Referenced but undefined cells are implicit blank inputs.
        for addr in extra:
            self._literals.setdefault(addr, None)

        order, leftover = _kahn_order(deps)
        self._poisoned: set[CellAddress] = leftover
        if leftover and not poison_cycles:
            raise CycleError(_find_cycle(deps, leftover))

        self._order: list[tuple[CellAddress, Thunk]] = [
            (addr, compiler.compile(formulas[addr])) for addr in order
        ]

    @property
    def scope_addresses(self) -> set[CellAddress]:
        return set(self._literals) | self._formula_addresses

    def run(self, overlay: ScenarioOverlay | None = None) -> EvaluationResult:
        """Evaluate once, optionally with input overrides."""
        env: Env = dict(self._literals)
        if overlay is not None:
            for addr, value in overlay.overrides.items():
                if addr in self._formula_addresses or (
                    (cell := self.workbook.get_cell(addr)) is not None and cell.is_formula
                ):
                    raise OverlayTargetError(
                        f"override target {addr} is a formula cell, not an input"
                    )
                if type(value) is int:  # numbers are doubles in the value domain
                    value = float(value)
                env[addr] = value
        for addr, thunk in self._order:
            env[addr] = thunk(env)
        for addr in self._poisoned:
            env[addr] = CYCLE_ERROR
        diagnostics = [
            (addr, v.kind)
            for addr, v in env.items()
            if type(v) is CellError
        ]
        diagnostics.sort(key=lambda pair: pair[0].sort_key)
        return EvaluationResult(values=env, diagnostics=diagnostics)


def _kahn_order(
    deps: dict[CellAddress, set[CellAddress]]
) -> tuple[list[CellAddress], set[CellAddress]]:
    """Topological order of formula cells; leftovers are on or downstream of
    a cycle."""
    indegree = {addr: len(d) for addr, d in deps.items()}
    dependents: dict[CellAddress, list[CellAddress]] = {}
    for addr, d in deps.items():
        for prereq in d:
            dependents.setdefault(prereq, []).append(addr)
    ready = sorted(
        (addr for addr, n in indegree.items() if n == 0),
        key=lambda a: a.sort_key,
    )
    order: list[CellAddress] = []
    while ready:
        addr = ready.pop()
        order.append(addr)
        for dep in dependents.get(addr, ()):
            indegree[dep] -= 1
            if indegree[dep] == 0:
                ready.append(dep)
    leftover = {addr for addr, n in indegree.items() if n > 0}
    return order, leftover


def _find_cycle(
    deps: dict[CellAddress, set[CellAddress]], candidates: set[CellAddress]
) -> list[CellAddress]:
    """Walk predecessor links inside the leftover set until a cell repeats."""
    start = min(candidates, key=lambda a: a.sort_key)
    seen: list[CellAddress] = []
    current = start
    while current not in seen:
        seen.append(current)
        current = min(
            (d for d in deps[current] if d in candidates),
            key=lambda a: a.sort_key,
        )
    cycle_start = seen.index(current)
    return seen[cycle_start:]


def evaluate(
    workbook: Workbook,
    scope: set[CellAddress] | None = None,
    overlay: ScenarioOverlay | None = None,
    poison_cycles: bool = False,
) -> EvaluationResult:
    """Evaluate a workbook (or a dependency-closed scope within it).

    Raises CycleError when the scope contains a circular reference, unless
    ``poison_cycles`` is set, in which case cells on or downstream of a cycle
    evaluate to CYCLE errors and everything else proceeds.
    """
    return Evaluator(workbook, scope=scope, poison_cycles=poison_cycles).run(overlay)
