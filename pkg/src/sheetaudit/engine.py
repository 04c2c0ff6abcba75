"""Precedence graph construction and workbook evaluation.

All evaluation failures are in-band Error values; the engine itself is
exact double-precision arithmetic. Tolerances live in the audit config
and apply only inside detectors.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Union

from .formula import (
    AGGREGATE_FUNCTIONS,
    BinOp,
    CellRef,
    DanglingRef,
    FormulaAst,
    FunCall,
    NumberLit,
    Percent,
    RangeRef,
    TextLit,
    UnaryOp,
)
from .model import Address, Ref, Workbook, addr_key


class ErrorKind(Enum):
    DIV0 = "#DIV/0!"
    REF = "#REF!"
    CYCLE = "#CYCLE!"
    VALUE = "#VALUE!"
    NAME = "#NAME?"


@dataclass(frozen=True)
class ErrorValue:
    kind: ErrorKind

    def __str__(self) -> str:
        return self.kind.value


# float = number, str = text, None = blank
Value = Union[float, str, None, ErrorValue]
Valuation = dict[Address, Value]


@dataclass
class DependencyGraph:
    """Arcs run precedent -> dependent; ranges expand to every covered
    address, so references to empty cells appear as Blank-valued arcs."""

    arcs: set[tuple[Address, Address]] = field(default_factory=set)
    precedents: dict[Address, list[Address]] = field(default_factory=dict)
    dependents: dict[Address, list[Address]] = field(default_factory=dict)


def resolve_ref(ref: Ref, sheet: str | None) -> Address:
    target = ref.target
    if target.sheet is None and sheet is not None:
        return replace(target, sheet=sheet)
    return target


def range_addresses(start: Address, end: Address) -> Iterator[Address]:
    for row in range(start.row, end.row + 1):
        for col in range(start.column, end.column + 1):
            yield Address(start.sheet, col, row)


def referenced_addresses(ast: FormulaAst, sheet: str | None) -> list[Address]:
    """Every address a formula reads, ranges fully expanded, in slot order."""
    out: list[Address] = []

    def walk(node: FormulaAst) -> None:
        if isinstance(node, CellRef):
            out.append(resolve_ref(node.ref, sheet))
        elif isinstance(node, RangeRef):
            out.extend(range_addresses(resolve_ref(node.start, sheet),
                                       resolve_ref(node.end, sheet)))
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


def build_graph(wb: Workbook) -> DependencyGraph:
    graph = DependencyGraph()
    for cell in wb.formula_cells():
        pre = sorted(set(referenced_addresses(cell.content.ast, cell.addr.sheet)),
                     key=addr_key)
        graph.precedents[cell.addr] = pre
        for p in pre:
            graph.arcs.add((p, cell.addr))
            graph.dependents.setdefault(p, []).append(cell.addr)
    for deps in graph.dependents.values():
        deps.sort(key=addr_key)
    return graph


def evaluate(wb: Workbook, graph: DependencyGraph | None = None,
             tie_break: str = "ascending") -> Valuation:
    """Evaluate every cell in topological order.

    tie_break picks which ready cell goes first; any choice yields the
    same valuation. Cells on or downstream of a reference cycle all get
    Error(CYCLE).
    """
    if graph is None:
        graph = build_graph(wb)
    valuation: Valuation = {}
    formula_addrs: set[Address] = set()
    for cell in wb.iter_cells():
        if cell.is_number:
            valuation[cell.addr] = cell.content.value
        elif cell.is_text:
            valuation[cell.addr] = cell.content.label
        else:
            formula_addrs.add(cell.addr)

    indegree = {
        addr: sum(1 for p in graph.precedents.get(addr, ()) if p in formula_addrs)
        for addr in formula_addrs
    }
    ready = sorted((a for a, d in indegree.items() if d == 0), key=addr_key)
    done: set[Address] = set()
    while ready:
        addr = ready.pop(0) if tie_break == "ascending" else ready.pop()
        done.add(addr)
        cell = wb.cell(addr)
        valuation[addr] = evaluate_ast(cell.content.ast, valuation, addr.sheet)
        for dep in graph.dependents.get(addr, ()):
            if dep in formula_addrs and dep not in done:
                indegree[dep] -= 1
                if indegree[dep] == 0:
                    bisect.insort(ready, dep, key=addr_key)

    for addr in formula_addrs - done:
        valuation[addr] = ErrorValue(ErrorKind.CYCLE)
    return valuation


def evaluate_ast(ast: FormulaAst, valuation: Valuation,
                 sheet: str | None = None) -> Value:
    """Evaluate a free-standing formula against existing cell values.
    `sheet` resolves unqualified references; the valuation is not mutated."""
    return _eval(ast, valuation, sheet)


def _number(value: Value) -> float | ErrorValue:
    """Arithmetic coercion: blank -> 0, text -> #VALUE!."""
    if isinstance(value, ErrorValue):
        return value
    if value is None:
        return 0.0
    if isinstance(value, str):
        return ErrorValue(ErrorKind.VALUE)
    return value


def _finite(value: float) -> Value:
    if not math.isfinite(value):
        return ErrorValue(ErrorKind.VALUE)
    return value


def _eval(node: FormulaAst, valuation: Valuation, sheet: str | None) -> Value:
    if isinstance(node, NumberLit):
        return node.value
    if isinstance(node, TextLit):
        return node.value
    if isinstance(node, CellRef):
        return valuation.get(resolve_ref(node.ref, sheet))
    if isinstance(node, DanglingRef):
        return ErrorValue(ErrorKind.REF)
    if isinstance(node, RangeRef):
        # a bare range only makes sense inside an aggregate argument
        return ErrorValue(ErrorKind.VALUE)
    if isinstance(node, Percent):
        operand = _number(_eval(node.operand, valuation, sheet))
        if isinstance(operand, ErrorValue):
            return operand
        return _finite(operand / 100.0)
    if isinstance(node, UnaryOp):
        operand = _number(_eval(node.operand, valuation, sheet))
        if isinstance(operand, ErrorValue):
            return operand
        return -operand if node.op == "-" else operand
    if isinstance(node, BinOp):
        return _eval_binop(node, valuation, sheet)
    if isinstance(node, FunCall):
        return _eval_funcall(node, valuation, sheet)
    raise TypeError(f"not a formula node: {node!r}")


def _eval_binop(node: BinOp, valuation: Valuation, sheet: str | None) -> Value:
    lhs = _number(_eval(node.lhs, valuation, sheet))
    if isinstance(lhs, ErrorValue):
        return lhs
    rhs = _number(_eval(node.rhs, valuation, sheet))
    if isinstance(rhs, ErrorValue):
        return rhs
    if node.op == "+":
        return _finite(lhs + rhs)
    if node.op == "-":
        return _finite(lhs - rhs)
    if node.op == "*":
        return _finite(lhs * rhs)
    if node.op == "/":
        if rhs == 0:
            return ErrorValue(ErrorKind.DIV0)
        return _finite(lhs / rhs)
    if node.op == "^":
        try:
            result = lhs**rhs
        except ZeroDivisionError:
            return ErrorValue(ErrorKind.DIV0)
        except OverflowError:
            return ErrorValue(ErrorKind.VALUE)
        if isinstance(result, complex):
            return ErrorValue(ErrorKind.VALUE)
        return _finite(result)
    raise ValueError(f"unknown operator {node.op!r}")


def _arg_values(args: tuple[FormulaAst, ...], valuation: Valuation,
                sheet: str | None) -> Iterator[Value]:
    for arg in args:
        if isinstance(arg, RangeRef):
            start = resolve_ref(arg.start, sheet)
            end = resolve_ref(arg.end, sheet)
            for addr in range_addresses(start, end):
                yield valuation.get(addr)
        else:
            yield _eval(arg, valuation, sheet)


def _eval_funcall(node: FunCall, valuation: Valuation, sheet: str | None) -> Value:
    name = node.name
    if name in AGGREGATE_FUNCTIONS:
        numbers: list[float] = []
        for value in _arg_values(node.args, valuation, sheet):
            if isinstance(value, ErrorValue):
                if name == "COUNT":
                    continue
                return value
            if isinstance(value, float):
                numbers.append(value)
            # blanks and text are skipped
        if name == "COUNT":
            return float(len(numbers))
        if name == "SUM":
            return _finite(math.fsum(numbers))
        if name == "AVERAGE":
            if not numbers:
                return ErrorValue(ErrorKind.DIV0)
            return _finite(math.fsum(numbers) / len(numbers))
        if name == "MIN":
            return min(numbers) if numbers else 0.0
        if name == "MAX":
            return max(numbers) if numbers else 0.0
        if name == "PRODUCT":
            if not numbers:
                return 0.0
            product = 1.0
            for n in numbers:
                product *= n
            return _finite(product)
    if name == "ROUND":
        if len(node.args) != 2:
            return ErrorValue(ErrorKind.VALUE)
        x = _number(_eval(node.args[0], valuation, sheet))
        if isinstance(x, ErrorValue):
            return x
        digits = _number(_eval(node.args[1], valuation, sheet))
        if isinstance(digits, ErrorValue):
            return digits
        return _round_half_away(x, int(digits))
    if name == "ABS":
        if len(node.args) != 1:
            return ErrorValue(ErrorKind.VALUE)
        x = _number(_eval(node.args[0], valuation, sheet))
        if isinstance(x, ErrorValue):
            return x
        return abs(x)
    if name == "PI":
        if node.args:
            return ErrorValue(ErrorKind.VALUE)
        return math.pi
    return ErrorValue(ErrorKind.NAME)


def _round_half_away(x: float, digits: int) -> Value:
    scale = 10.0**digits
    scaled = abs(x) * scale
    if not math.isfinite(scaled):
        return ErrorValue(ErrorKind.VALUE)
    rounded = math.floor(scaled + 0.5) / scale
    return _finite(math.copysign(rounded, x))
