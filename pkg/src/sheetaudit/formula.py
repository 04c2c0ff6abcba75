"""Formula language: lexer, recursive-descent parser, canonical printer,
and the reference arithmetic used to simulate copy/paste.

Grammar (whitespace insignificant):

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := unary ("^" factor)?
    unary   := ("-" | "+")* postfix
    postfix := primary ("%")*
    primary := number | string | ref | range | funcall | "(" expr ")"

"^" is right-associative; "%" divides by 100 at evaluation time. Defined
names, union/intersection range operators and 3-D references are rejected.
Unknown function names parse and only fail when evaluated.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterator, Union

from .model import MAX_COLUMN, Address, Ref, parse_ref

AGGREGATE_FUNCTIONS = frozenset({"SUM", "AVERAGE", "MIN", "MAX", "PRODUCT", "COUNT"})
KNOWN_FUNCTIONS = AGGREGATE_FUNCTIONS | {"ROUND", "ABS", "PI"}


class FormulaError(ValueError):
    """Lexical or syntax error with the character offset in the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class NumberLit:
    value: float


@dataclass(frozen=True)
class TextLit:
    value: str


@dataclass(frozen=True)
class CellRef:
    ref: Ref


@dataclass(frozen=True)
class RangeRef:
    start: Ref
    end: Ref


@dataclass(frozen=True)
class DanglingRef:
    """A reference slot destroyed by an off-grid shift; evaluates to #REF!."""


@dataclass(frozen=True)
class FunCall:
    name: str
    args: tuple["FormulaAst", ...]


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "FormulaAst"
    rhs: "FormulaAst"


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "FormulaAst"


@dataclass(frozen=True)
class Percent:
    operand: "FormulaAst"


FormulaAst = Union[
    NumberLit, TextLit, CellRef, RangeRef, DanglingRef, FunCall, BinOp, UnaryOp, Percent
]

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>(?:[0-9]+(?:\.[0-9]+)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)
      | (?P<string>"[^"]*")
      | (?P<referr>\#REF!)
      | (?P<ref>(?:[A-Za-z_][A-Za-z0-9_]*!)?\$?[A-Za-z]{1,3}\$?[1-9][0-9]*(?![0-9A-Za-z_.]))
      | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
      | (?P<op>[-+*/^%():,])
    """,
    re.VERBOSE,
)

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*$")


@dataclass(frozen=True)
class _Token:
    kind: str  # number | string | referr | ref | name | op | eof
    text: str
    offset: int


def _tokenize(source: str, base: int) -> Iterator[_Token]:
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise FormulaError(f"unexpected character {source[pos]!r}", base + pos)
        kind = m.lastgroup or ""
        if kind != "ws":
            yield _Token(kind, m.group(), base + pos)
        pos = m.end()
    yield _Token("eof", "", base + pos)


def parse_formula(source: str) -> FormulaAst:
    """Parse a formula string beginning with "="."""
    if not source.startswith("="):
        raise FormulaError('formula must start with "="', 0)
    tokens = list(_tokenize(source[1:], 1))
    return _Parser(tokens).parse()


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._i = 0

    def parse(self) -> FormulaAst:
        node = self._expr()
        tok = self._peek()
        if tok.kind != "eof":
            raise FormulaError(f"unexpected token {tok.text!r}", tok.offset)
        return node

    def _peek(self) -> _Token:
        return self._tokens[self._i]

    def _advance(self) -> _Token:
        tok = self._tokens[self._i]
        self._i += 1
        return tok

    def _accept_op(self, *chars: str) -> _Token | None:
        tok = self._peek()
        if tok.kind == "op" and tok.text in chars:
            return self._advance()
        return None

    def _expect_op(self, char: str) -> None:
        tok = self._peek()
        if tok.kind != "op" or tok.text != char:
            raise FormulaError(f"expected {char!r}, got {tok.text or 'end'!r}", tok.offset)
        self._advance()

    def _expr(self) -> FormulaAst:
        node = self._term()
        while (tok := self._accept_op("+", "-")) is not None:
            node = BinOp(tok.text, node, self._term())
        return node

    def _term(self) -> FormulaAst:
        node = self._factor()
        while (tok := self._accept_op("*", "/")) is not None:
            node = BinOp(tok.text, node, self._factor())
        return node

    def _factor(self) -> FormulaAst:
        node = self._unary()
        if self._accept_op("^") is not None:
            return BinOp("^", node, self._factor())
        return node

    def _unary(self) -> FormulaAst:
        ops: list[str] = []
        while (tok := self._accept_op("-", "+")) is not None:
            ops.append(tok.text)
        node = self._postfix()
        for op in reversed(ops):
            node = UnaryOp(op, node)
        return node

    def _postfix(self) -> FormulaAst:
        node = self._primary()
        while self._accept_op("%") is not None:
            node = Percent(node)
        return node

    def _primary(self) -> FormulaAst:
        tok = self._peek()
        if tok.kind == "number":
            self._advance()
            return NumberLit(float(tok.text))
        if tok.kind == "string":
            self._advance()
            return TextLit(tok.text[1:-1])
        if tok.kind == "referr":
            self._advance()
            return DanglingRef()
        if tok.kind == "ref":
            self._advance()
            if self._peek().kind == "op" and self._peek().text == "(":
                return self._funcall(tok)
            return self._ref_or_range(tok)
        if tok.kind == "name":
            self._advance()
            if self._peek().kind == "op" and self._peek().text == "(":
                return self._funcall(tok)
            raise FormulaError(
                f"unknown name {tok.text!r} (defined names are not supported)",
                tok.offset,
            )
        if tok.kind == "op" and tok.text == "(":
            self._advance()
            node = self._expr()
            self._expect_op(")")
            return node
        raise FormulaError(f"unexpected token {tok.text or 'end'!r}", tok.offset)

    def _funcall(self, name_tok: _Token) -> FunCall:
        if not _NAME_RE.match(name_tok.text):
            raise FormulaError(f"invalid function name {name_tok.text!r}", name_tok.offset)
        self._expect_op("(")
        args: list[FormulaAst] = []
        if self._accept_op(")") is not None:
            return FunCall(name_tok.text.upper(), ())
        args.append(self._expr())
        while self._accept_op(",") is not None:
            args.append(self._expr())
        self._expect_op(")")
        return FunCall(name_tok.text.upper(), tuple(args))

    def _ref_or_range(self, tok: _Token) -> FormulaAst:
        start = parse_ref(tok.text)
        if self._accept_op(":") is None:
            return CellRef(start)
        end_tok = self._peek()
        if end_tok.kind != "ref":
            raise FormulaError("expected range end reference", end_tok.offset)
        self._advance()
        end = parse_ref(end_tok.text)
        if end.target.sheet is None and start.target.sheet is not None:
            end = replace(end, target=replace(end.target, sheet=start.target.sheet))
        if end.target.sheet != start.target.sheet:
            raise FormulaError("range endpoints must be on one sheet", end_tok.offset)
        return RangeRef(*normalize_range(start, end))


def normalize_range(start: Ref, end: Ref) -> tuple[Ref, Ref]:
    """Reorder endpoints so start is the top-left corner, swapping the
    value and $ flag of each axis together. On equal coordinates the
    anchored ($) endpoint goes first; the fixed tie-break makes
    translation round-trip exactly."""
    s_col, s_ca = start.target.column, start.column_absolute
    e_col, e_ca = end.target.column, end.column_absolute
    if s_col > e_col or (s_col == e_col and e_ca and not s_ca):
        s_col, e_col = e_col, s_col
        s_ca, e_ca = e_ca, s_ca
    s_row, s_ra = start.target.row, start.row_absolute
    e_row, e_ra = end.target.row, end.row_absolute
    if s_row > e_row or (s_row == e_row and e_ra and not s_ra):
        s_row, e_row = e_row, s_row
        s_ra, e_ra = e_ra, s_ra
    sheet = start.target.sheet
    return (
        Ref(Address(sheet, s_col, s_row), s_ca, s_ra),
        Ref(Address(sheet, e_col, e_row), e_ca, e_ra),
    )


def format_number(value: float) -> str:
    """Canonical numeric literal text; round-trips through the lexer."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


_BIN_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _prec(node: FormulaAst) -> int:
    if isinstance(node, BinOp):
        return _BIN_PREC[node.op]
    if isinstance(node, UnaryOp):
        return 4
    if isinstance(node, Percent):
        return 5
    return 6


def print_formula(ast: FormulaAst) -> str:
    """Canonical text: uppercase functions, no whitespace, minimal parens."""
    return "=" + _print(ast)


def _print(node: FormulaAst) -> str:
    if isinstance(node, NumberLit):
        return format_number(node.value)
    if isinstance(node, TextLit):
        return f'"{node.value}"'
    if isinstance(node, CellRef):
        return node.ref.render()
    if isinstance(node, RangeRef):
        same = node.start.target.sheet == node.end.target.sheet
        return f"{node.start.render()}:{node.end.render(omit_sheet=same)}"
    if isinstance(node, DanglingRef):
        return "#REF!"
    if isinstance(node, FunCall):
        return f"{node.name}({','.join(_print(a) for a in node.args)})"
    if isinstance(node, BinOp):
        p = _BIN_PREC[node.op]
        if node.op == "^":
            return f"{_wrap(node.lhs, 4)}^{_wrap(node.rhs, 3)}"
        return f"{_wrap(node.lhs, p)}{node.op}{_wrap(node.rhs, p + 1)}"
    if isinstance(node, UnaryOp):
        return f"{node.op}{_wrap(node.operand, 4)}"
    if isinstance(node, Percent):
        return f"{_wrap(node.operand, 5)}%"
    raise TypeError(f"not a formula node: {node!r}")


def _wrap(node: FormulaAst, minimum: int) -> str:
    text = _print(node)
    return f"({text})" if _prec(node) < minimum else text


def literals_of(ast: FormulaAst) -> list[float]:
    """Numeric literals in left-to-right order (text literals excluded)."""
    out: list[float] = []

    def walk(node: FormulaAst) -> None:
        if isinstance(node, NumberLit):
            out.append(node.value)
        elif isinstance(node, FunCall):
            for arg in node.args:
                walk(arg)
        elif isinstance(node, BinOp):
            walk(node.lhs)
            walk(node.rhs)
        elif isinstance(node, (UnaryOp, Percent)):
            walk(node.operand)

    walk(ast)
    return out


def refs_of(ast: FormulaAst) -> list[Ref]:
    """Reference slots in left-to-right order; a range yields two slots
    (its endpoints). Slot indices match the placeholders of ast_shape."""
    out: list[Ref] = []

    def walk(node: FormulaAst) -> None:
        if isinstance(node, CellRef):
            out.append(node.ref)
        elif isinstance(node, RangeRef):
            out.append(node.start)
            out.append(node.end)
        elif isinstance(node, FunCall):
            for arg in node.args:
                walk(arg)
        elif isinstance(node, BinOp):
            walk(node.lhs)
            walk(node.rhs)
        elif isinstance(node, (UnaryOp, Percent)):
            walk(node.operand)

    walk(ast)
    return out


def ast_shape(ast: FormulaAst) -> str:
    """Structural fingerprint: references become positional slots,
    literals and function names stay verbatim. Two formulas are clones
    exactly when their shapes are equal."""
    if isinstance(ast, NumberLit):
        return format_number(ast.value)
    if isinstance(ast, TextLit):
        return f'"{ast.value}"'
    if isinstance(ast, CellRef):
        return "@"
    if isinstance(ast, RangeRef):
        return "@:@"
    if isinstance(ast, DanglingRef):
        return "#REF!"
    if isinstance(ast, FunCall):
        return f"{ast.name}({','.join(ast_shape(a) for a in ast.args)})"
    if isinstance(ast, BinOp):
        return f"({ast_shape(ast.lhs)}{ast.op}{ast_shape(ast.rhs)})"
    if isinstance(ast, UnaryOp):
        return f"({ast.op}{ast_shape(ast.operand)})"
    if isinstance(ast, Percent):
        return f"({ast_shape(ast.operand)}%)"
    raise TypeError(f"not a formula node: {ast!r}")


TRIVIAL_SHAPE = "@"  # a bare single reference, no computation around it


def translate_refs(ast: FormulaAst, delta: tuple[int, int]) -> FormulaAst:
    """Shift every relative axis of every reference by delta, as a paste
    would. A shift off the grid replaces that slot with DanglingRef."""
    dcol, drow = delta

    def shift(ref: Ref) -> Ref | None:
        col = ref.target.column if ref.column_absolute else ref.target.column + dcol
        row = ref.target.row if ref.row_absolute else ref.target.row + drow
        if col < 1 or col > MAX_COLUMN or row < 1:
            return None
        return Ref(Address(ref.target.sheet, col, row),
                   ref.column_absolute, ref.row_absolute)

    def walk(node: FormulaAst) -> FormulaAst:
        if isinstance(node, CellRef):
            moved = shift(node.ref)
            return CellRef(moved) if moved else DanglingRef()
        if isinstance(node, RangeRef):
            start, end = shift(node.start), shift(node.end)
            if start is None or end is None:
                return DanglingRef()
            return RangeRef(*normalize_range(start, end))
        if isinstance(node, FunCall):
            return FunCall(node.name, tuple(walk(a) for a in node.args))
        if isinstance(node, BinOp):
            return BinOp(node.op, walk(node.lhs), walk(node.rhs))
        if isinstance(node, UnaryOp):
            return UnaryOp(node.op, walk(node.operand))
        if isinstance(node, Percent):
            return Percent(walk(node.operand))
        return node

    return walk(ast)
