"""Spreadsheet formula dialect: lexer, parser, AST, and reference extraction.

The grammar covers the dialect observed in large engineering workbooks:
numbers, strings, booleans, cell and range references (optionally
sheet-qualified, with quoted sheet names), defined names, the operators
``+ - * / ^ & = <> < <= > >=``, unary sign, and function calls.

Precedence, loosest to tightest: comparisons, ``&``, ``+ -``, ``* /``,
``^``, unary sign. Unary minus binds tighter than ``^`` so ``=-2^2`` is 4,
matching spreadsheet convention rather than mathematical convention. ``^``
and all binary operators associate left.

Parsing is whitespace-insensitive. Serialization produces a normalized
formula: upper-case function names, no spaces, minimal parentheses, sheet
names quoted only when they are not plain identifiers. ``parse(serialize(t))``
is structurally identical to ``t``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Union

from .addresses import (
    CellAddress,
    CellRange,
    RefTarget,
    letters_to_column,
    quote_sheet_name,
)
from .errors import FormulaParseError

# --------------------------------------------------------------------------
# AST nodes
# --------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class NumberLit:
    value: float


@dataclass(frozen=True, slots=True)
class TextLit:
    value: str


@dataclass(frozen=True, slots=True)
class BoolLit:
    value: bool


@dataclass(frozen=True, slots=True)
class CellRef:
    address: CellAddress
    sheet_qualified: bool = False


@dataclass(frozen=True, slots=True)
class RangeRef:
    cells: CellRange
    sheet_qualified: bool = False


@dataclass(frozen=True, slots=True)
class NameRef:
    """A defined-name reference, resolved against the workbook's name map."""

    name: str


@dataclass(frozen=True, slots=True)
class UnaryOp:
    op: str  # "-" or "+"
    operand: "FormulaAst"


@dataclass(frozen=True, slots=True)
class BinaryOp:
    op: str
    left: "FormulaAst"
    right: "FormulaAst"


@dataclass(frozen=True, slots=True)
class FunctionCall:
    name: str  # upper-cased at parse time
    args: tuple["FormulaAst", ...]


FormulaAst = Union[
    NumberLit, TextLit, BoolLit, CellRef, RangeRef, NameRef, UnaryOp, BinaryOp, FunctionCall
]

# --------------------------------------------------------------------------
# Lexer
# --------------------------------------------------------------------------


class TokenKind(enum.Enum):
    NUMBER = "a number"
    STRING = "a string"
    CELL = "a cell reference"
    NAME = "a name"
    OP = "an operator"
    LPAREN = "'('"
    RPAREN = "')'"
    COMMA = "','"
    COLON = "':'"
    EOF = "end of formula"


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    text: str
    offset: int


_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<number>(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)
    | (?P<string>"(?:[^"]|"")*")
    | (?P<cell>(?:(?:'(?:[^']|'')+'|[A-Za-z_][A-Za-z0-9_]*)!)?
               \$?[A-Za-z]{1,3}\$?[0-9]+(?![A-Za-z0-9_.!]))
    | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
    | (?P<op><=|>=|<>|[=<>+\-*/^&])
    | (?P<lparen>\()
    | (?P<rparen>\))
    | (?P<comma>,)
    | (?P<colon>:)
    """,
    re.VERBOSE,
)

_GROUP_KINDS = {
    "number": TokenKind.NUMBER,
    "string": TokenKind.STRING,
    "cell": TokenKind.CELL,
    "name": TokenKind.NAME,
    "op": TokenKind.OP,
    "lparen": TokenKind.LPAREN,
    "rparen": TokenKind.RPAREN,
    "comma": TokenKind.COMMA,
    "colon": TokenKind.COLON,
}


def tokenize(text: str, start: int = 0) -> Iterator[Token]:
    """Tokenize formula body text, skipping whitespace.

    Raises FormulaParseError on any character no token can start with.
    """
    pos = start
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            yield Token(_GROUP_KINDS[m.lastgroup], m.group(), pos)
        pos = m.end()
    yield Token(TokenKind.EOF, "", len(text))


def _split_cell_token(text: str) -> tuple[str | None, int, int]:
    """Split a CELL token into (sheet or None, column, row)."""
    sheet = None
    rest = text
    if "!" in text:
        if text.startswith("'"):
            close = text.rindex("'")
            sheet = text[1:close].replace("''", "'")
            rest = text[close + 2 :]
        else:
            sheet, rest = text.split("!", 1)
    rest = rest.replace("$", "")
    letters = rest.rstrip("0123456789")
    return sheet, letters_to_column(letters), int(rest[len(letters) :])


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_COMPARISON_OPS = {"=", "<>", "<", "<=", ">", ">="}


class _Parser:
    def __init__(self, text: str, default_sheet: str):
        self.text = text
        self.default_sheet = default_sheet
        self.tokens = list(tokenize(text, start=1))  # skip the leading "="
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected: str) -> None:
        tok = self.current
        got = repr(tok.text) if tok.kind is not TokenKind.EOF else "end of formula"
        raise FormulaParseError(
            f"expected {expected}, got {got}", tok.offset, expected=expected
        )

    def expect(self, kind: TokenKind) -> Token:
        if self.current.kind is not kind:
            self.fail(kind.value)
        return self.advance()

    def accept_op(self, ops: set[str] | tuple[str, ...]) -> str | None:
        tok = self.current
        if tok.kind is TokenKind.OP and tok.text in ops:
            self.advance()
            return tok.text
        return None

    # Precedence ladder, loosest first.

    def expression(self) -> FormulaAst:
        node = self.concatenation()
        while (op := self.accept_op(_COMPARISON_OPS)) is not None:
            node = BinaryOp(op, node, self.concatenation())
        return node

    def concatenation(self) -> FormulaAst:
        node = self.additive()
        while self.accept_op(("&",)) is not None:
            node = BinaryOp("&", node, self.additive())
        return node

    def additive(self) -> FormulaAst:
        node = self.multiplicative()
        while (op := self.accept_op(("+", "-"))) is not None:
            node = BinaryOp(op, node, self.multiplicative())
        return node

    def multiplicative(self) -> FormulaAst:
        node = self.power()
        while (op := self.accept_op(("*", "/"))) is not None:
            node = BinaryOp(op, node, self.power())
        return node

    def power(self) -> FormulaAst:
        # Operands are signed atoms, so unary minus binds tighter than ^.
        node = self.signed()
        while self.accept_op(("^",)) is not None:
            node = BinaryOp("^", node, self.signed())
        return node

    def signed(self) -> FormulaAst:
        if (op := self.accept_op(("-", "+"))) is not None:
            return UnaryOp(op, self.signed())
        return self.atom()

    def atom(self) -> FormulaAst:
        tok = self.current
        if tok.kind is TokenKind.NUMBER:
            self.advance()
            return NumberLit(float(tok.text))
        if tok.kind is TokenKind.STRING:
            self.advance()
            return TextLit(tok.text[1:-1].replace('""', '"'))
        if tok.kind is TokenKind.CELL:
            return self.reference()
        if tok.kind is TokenKind.NAME:
            return self.name_or_call()
        if tok.kind is TokenKind.LPAREN:
            self.advance()
            node = self.expression()
            self.expect(TokenKind.RPAREN)
            return node
        self.fail("a value, reference, or '('")
        raise AssertionError("unreachable")

    def reference(self) -> FormulaAst:
        tok = self.advance()
        sheet, column, row = _split_cell_token(tok.text)
        qualified = sheet is not None
        sheet_name = sheet if sheet is not None else self.default_sheet
        start = CellAddress(sheet_name, column, row)
        if self.current.kind is TokenKind.COLON:
            self.advance()
            end_tok = self.expect(TokenKind.CELL)
            end_sheet, end_col, end_row = _split_cell_token(end_tok.text)
            if end_sheet is not None and end_sheet != sheet_name:
                raise FormulaParseError(
                    "range endpoints must be on the same sheet", end_tok.offset
                )
            end = CellAddress(sheet_name, end_col, end_row)
            return RangeRef(CellRange(start, end), sheet_qualified=qualified)
        return CellRef(start, sheet_qualified=qualified)

    def name_or_call(self) -> FormulaAst:
        tok = self.advance()
        if self.current.kind is TokenKind.LPAREN:
            self.advance()
            args: list[FormulaAst] = []
            if self.current.kind is not TokenKind.RPAREN:
                args.append(self.expression())
                while self.current.kind is TokenKind.COMMA:
                    self.advance()
                    args.append(self.expression())
            self.expect(TokenKind.RPAREN)
            return FunctionCall(tok.text.upper(), tuple(args))
        upper = tok.text.upper()
        if upper == "TRUE":
            return BoolLit(True)
        if upper == "FALSE":
            return BoolLit(False)
        return NameRef(tok.text)


def parse_formula(text: str, default_sheet: str = "") -> FormulaAst:
    """Parse a formula string (must begin with ``=``) into an AST.

    Unqualified references are placed on ``default_sheet``; the workbook
    loader passes the owning sheet's name.
    """
    if not text.startswith("="):
        raise FormulaParseError("formula must begin with '='", 0)
    parser = _Parser(text, default_sheet)
    node = parser.expression()
    if parser.current.kind is not TokenKind.EOF:
        parser.fail("end of formula or an operator")
    return node


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

_BIN_PRECEDENCE = {
    "=": 1, "<>": 1, "<": 1, "<=": 1, ">": 1, ">=": 1,
    "&": 2,
    "+": 3, "-": 3,
    "*": 4, "/": 4,
    "^": 5,
}
_UNARY_PRECEDENCE = 6
_ATOM_PRECEDENCE = 7


def _number_text(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _ref_text(sheet: str, qualified: bool, body: str) -> str:
    if qualified:
        return f"{quote_sheet_name(sheet)}!{body}"
    return body


def _serialize(node: FormulaAst) -> tuple[str, int]:
    """Serialize a node, returning (text, precedence of its top construct)."""
    t = type(node)
    if t is NumberLit:
        return _number_text(node.value), _ATOM_PRECEDENCE
    if t is TextLit:
        return '"' + node.value.replace('"', '""') + '"', _ATOM_PRECEDENCE
    if t is BoolLit:
        return ("TRUE" if node.value else "FALSE"), _ATOM_PRECEDENCE
    if t is CellRef:
        return _ref_text(node.address.sheet, node.sheet_qualified, node.address.a1), _ATOM_PRECEDENCE
    if t is RangeRef:
        r = node.cells
        return _ref_text(r.sheet, node.sheet_qualified, f"{r.start.a1}:{r.end.a1}"), _ATOM_PRECEDENCE
    if t is NameRef:
        return node.name, _ATOM_PRECEDENCE
    if t is FunctionCall:
        args = ",".join(_serialize(a)[0] for a in node.args)
        return f"{node.name}({args})", _ATOM_PRECEDENCE
    if t is UnaryOp:
        text, prec = _serialize(node.operand)
        if prec < _UNARY_PRECEDENCE:
            text = f"({text})"
        return node.op + text, _UNARY_PRECEDENCE
    if t is BinaryOp:
        prec = _BIN_PRECEDENCE[node.op]
        left, lprec = _serialize(node.left)
        if lprec < prec:
            left = f"({left})"
        right, rprec = _serialize(node.right)
        # Left-associative grammar: parenthesize a right child of equal level.
        if rprec <= prec:
            right = f"({right})"
        return f"{left}{node.op}{right}", prec
    raise TypeError(f"not a formula node: {node!r}")


def serialize_formula(ast: FormulaAst) -> str:
    """Render an AST as normalized formula text, including the leading ``=``."""
    return "=" + _serialize(ast)[0]


# --------------------------------------------------------------------------
# Reference extraction
# --------------------------------------------------------------------------


class RefContext(enum.Enum):
    """How a reference occurrence is consumed by its formula."""

    ARITHMETIC = "arithmetic"
    LOOKUP_TABLE = "lookup-table"
    AGGREGATE = "aggregate"


@dataclass(frozen=True, slots=True)
class RefOccurrence:
    target: RefTarget
    context: RefContext


@dataclass
class ReferenceSet:
    """All reference occurrences of one formula, with consumption contexts.

    ``occurrences`` is the multiset of reference leaves in source order;
    ``cells``/``ranges`` are the deduplicated views. Defined names that the
    resolver cannot map are collected in ``unresolved_names`` rather than
    raising.
    """

    occurrences: list[RefOccurrence] = field(default_factory=list)
    unresolved_names: list[str] = field(default_factory=list)

    @property
    def cells(self) -> set[CellAddress]:
        return {o.target for o in self.occurrences if isinstance(o.target, CellAddress)}

    @property
    def ranges(self) -> set[CellRange]:
        return {o.target for o in self.occurrences if isinstance(o.target, CellRange)}

    def tagged(self, context: RefContext) -> set[RefTarget]:
        return {o.target for o in self.occurrences if o.context is context}


# Argument index (0-based) holding the lookup table of each lookup function.
_LOOKUP_TABLE_ARG = {"VLOOKUP": 1, "HLOOKUP": 1, "MATCH": 1}
# Functions whose direct reference arguments are consumed as aggregates.
_AGGREGATE_FUNCS = {"SUM", "SUMIF"}


def _make_resolver(
    defined_names: Mapping[str, RefTarget] | None,
) -> Callable[[str], RefTarget | None]:
    if not defined_names:
        return lambda name: None
    folded = {name.casefold(): target for name, target in defined_names.items()}
    return lambda name: folded.get(name.casefold())


def extract_references(
    ast: FormulaAst,
    defined_names: Mapping[str, RefTarget] | None = None,
) -> ReferenceSet:
    """Collect every reference occurrence in an AST, tagged with its context.

    A range is tagged lookup-table iff it is the table argument of VLOOKUP,
    HLOOKUP, or MATCH; a reference that is a direct argument of SUM or SUMIF
    is tagged aggregate; every other occurrence is arithmetic. Defined names
    are resolved through ``defined_names`` (case-insensitive); unresolved
    names are reported, not raised.
    """
    resolve = _make_resolver(defined_names)
    refs = ReferenceSet()

    def visit(node: FormulaAst, context: RefContext) -> None:
        t = type(node)
        if t is CellRef:
            refs.occurrences.append(RefOccurrence(node.address, context))
        elif t is RangeRef:
            refs.occurrences.append(RefOccurrence(node.cells, context))
        elif t is NameRef:
            target = resolve(node.name)
            if target is None:
                refs.unresolved_names.append(node.name)
            else:
                refs.occurrences.append(RefOccurrence(target, context))
        elif t is UnaryOp:
            visit(node.operand, RefContext.ARITHMETIC)
        elif t is BinaryOp:
            visit(node.left, RefContext.ARITHMETIC)
            visit(node.right, RefContext.ARITHMETIC)
        elif t is FunctionCall:
            table_arg = _LOOKUP_TABLE_ARG.get(node.name)
            aggregate = node.name in _AGGREGATE_FUNCS
            for i, arg in enumerate(node.args):
                if table_arg is not None and i == table_arg:
                    visit(arg, RefContext.LOOKUP_TABLE)
                elif aggregate:
                    visit(arg, RefContext.AGGREGATE)
                else:
                    visit(arg, RefContext.ARITHMETIC)

    visit(ast, RefContext.ARITHMETIC)
    return refs


def walk(ast: FormulaAst) -> Iterator[FormulaAst]:
    """Yield every node of an AST, depth-first, parents before children."""
    stack = [ast]
    while stack:
        node = stack.pop()
        yield node
        t = type(node)
        if t is UnaryOp:
            stack.append(node.operand)
        elif t is BinaryOp:
            stack.append(node.right)
            stack.append(node.left)
        elif t is FunctionCall:
            stack.extend(reversed(node.args))


def function_names(ast: FormulaAst) -> Iterator[str]:
    """Yield the name of every function call in the AST, nested included."""
    for node in walk(ast):
        if type(node) is FunctionCall:
            yield node.name
