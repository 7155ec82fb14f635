"""Independent oracles the property suites check the toolkit against.

The recursive evaluator interprets formula ASTs directly with memoized
recursion from the requested cells, sharing nothing with the engine's
compiled topological evaluation beyond the parsed AST and the documented
value contract. Errors are plain strings here ("DIV0", ...) so no engine
value types leak in.
"""

from __future__ import annotations

import math
from collections import deque

from gridlens.formula import (
    BinaryOp,
    BoolLit,
    CellRef,
    FunctionCall,
    NumberLit,
    RangeRef,
    TextLit,
    UnaryOp,
    parse_formula,
)

ERROR_KINDS = ("DIV0", "NA", "VALUE", "REF", "NAME", "CYCLE")


def _is_err(v) -> bool:
    return isinstance(v, str) and v in ERROR_KINDS


def _num(v):
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, float):
        return v
    if v is None:
        return 0.0
    if _is_err(v):
        return v
    return "VALUE"


def _fin(x: float):
    return x if math.isfinite(x) else "VALUE"


def _cmp(a, b):
    if a is None and b is None:
        return 0
    if a is None:
        a = 0.0 if isinstance(b, float) else False
    if b is None:
        b = 0.0 if isinstance(a, float) else False
    rank = lambda v: 2 if isinstance(v, bool) else 0
    if rank(a) != rank(b):
        return -1 if rank(a) < rank(b) else 1
    return -1 if a < b else (1 if a > b else 0)


def recursive_evaluate(document: dict, targets: list[str]) -> dict[str, object]:
    """Evaluate the target cells of a workbook document by plain recursion.

    Supports the generator's dialect: numeric/boolean literals, cell and
    range references, + - * /, comparisons, unary sign, SUM, MIN, MAX,
    AVERAGE, ABS, IF.
    """
    literals: dict[str, object] = {}
    formulas: dict[str, object] = {}
    for sheet in document["sheets"]:
        name = sheet["name"]
        for cell in sheet["cells"]:
            key = f"{name}!{cell['addr']}"
            if "formula" in cell:
                formulas[key] = parse_formula(cell["formula"], default_sheet=name)
            else:
                v = cell["value"]
                literals[key] = float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v

    memo: dict[str, object] = {}

    def cell_value(key: str):
        if key in memo:
            return memo[key]
        if key in formulas:
            memo[key] = interp(formulas[key])
        else:
            memo[key] = literals.get(key)
        return memo[key]

    def numbers_of(args_values) -> list[float] | str:
        nums: list[float] = []
        for v in args_values:
            if isinstance(v, list):
                for member in v:
                    if _is_err(member):
                        return member
                    if isinstance(member, float) and not isinstance(member, bool):
                        nums.append(member)
            else:
                n = _num(v)
                if _is_err(n):
                    return n
                nums.append(n)
        return nums

    def interp(node):
        t = type(node)
        if t is NumberLit:
            return node.value
        if t is BoolLit:
            return node.value
        if t is TextLit:
            return node.value
        if t is CellRef:
            return cell_value(str(node.address))
        if t is RangeRef:
            return [cell_value(str(a)) for a in node.cells.addresses()]
        if t is UnaryOp:
            v = interp(node.operand)
            if node.op == "+":
                return v
            n = _num(v)
            return n if _is_err(n) else -n
        if t is BinaryOp:
            if node.op in ("=", "<>", "<", "<=", ">", ">="):
                a = interp(node.left)
                if _is_err(a):
                    return a
                b = interp(node.right)
                if _is_err(b):
                    return b
                c = _cmp(a, b)
                return {
                    "=": c == 0, "<>": c != 0, "<": c < 0,
                    "<=": c <= 0, ">": c > 0, ">=": c >= 0,
                }[node.op]
            a = _num(interp(node.left))
            if _is_err(a):
                return a
            b = _num(interp(node.right))
            if _is_err(b):
                return b
            if node.op == "+":
                return _fin(a + b)
            if node.op == "-":
                return _fin(a - b)
            if node.op == "*":
                return _fin(a * b)
            if node.op == "/":
                return "DIV0" if b == 0.0 else _fin(a / b)
            raise AssertionError(f"oracle does not model operator {node.op}")
        if t is FunctionCall:
            if node.name == "IF":
                c = interp(node.args[0])
                if _is_err(c):
                    return c
                if isinstance(c, bool):
                    cond = c
                elif isinstance(c, float):
                    cond = c != 0.0
                elif c is None:
                    cond = False
                else:
                    return "VALUE"
                if cond:
                    return interp(node.args[1])
                return interp(node.args[2]) if len(node.args) > 2 else False
            values = [interp(a) for a in node.args]
            nums = numbers_of(values)
            if _is_err(nums):
                return nums
            if node.name == "SUM":
                return _fin(math.fsum(nums))
            if node.name == "MIN":
                return min(nums) if nums else 0.0
            if node.name == "MAX":
                return max(nums) if nums else 0.0
            if node.name == "AVERAGE":
                return "DIV0" if not nums else _fin(math.fsum(nums) / len(nums))
            if node.name == "ABS":
                return abs(nums[0])
            raise AssertionError(f"oracle does not model function {node.name}")
        raise AssertionError(f"oracle cannot interpret {node!r}")

    return {key: cell_value(key) for key in targets}


def engine_value_to_oracle(v) -> object:
    """Map an engine value onto the oracle's representation."""
    from gridlens.values import CellError

    if type(v) is CellError:
        return v.kind.name
    return v


def bfs_reachable(true_edges: dict[str, set[str]], starts: list[str]) -> set[str]:
    """Breadth-first closure over the generator's recorded edges."""
    seen: set[str] = set()
    queue = deque(starts)
    while queue:
        node = queue.popleft()
        if node in seen:
            continue
        seen.add(node)
        queue.extend(true_edges.get(node, ()))
    return seen


def degree_counts(true_edges: dict[str, set[str]], nodes: set[str]) -> dict[str, int]:
    """Brute-force valency per node over deduplicated edge pairs."""
    deg = {n: 0 for n in nodes}
    for src, targets in true_edges.items():
        for dst in targets:
            if src in deg and dst in deg:
                deg[src] += 1
                deg[dst] += 1
    return deg


def simple_paths(edges: dict[str, set[str]], start: str, goal: str) -> list[tuple[str, ...]]:
    """Exhaustive simple-path enumeration (for small fixtures only)."""
    out: list[tuple[str, ...]] = []

    def walk(node: str, path: tuple[str, ...]):
        if node == goal:
            out.append(path)
            return
        for nxt in sorted(edges.get(node, ())):
            if nxt not in path:
                walk(nxt, path + (nxt,))

    walk(start, (start,))
    return out
