"""Grid data model and workbook-document loading.

A workbook document is a UTF-8 JSON object:

    {"sheets": [{"name": "Sheet1", "cells": [CellEntry, ...]}]}

where each CellEntry holds an "addr" in A1 notation, exactly one of
"number" | "text" | "formula", and an optional "format" object with
"input_marker", "numfmt" and "decimals". Unknown keys are rejected.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterator, Union

if TYPE_CHECKING:
    from .config import AuditConfig
    from .formula import FormulaAst

MAX_COLUMN = 26 + 26**2 + 26**3  # three-letter columns only

_ADDR_RE = re.compile(
    r"^(?:([A-Za-z_][A-Za-z0-9_]*)!)?(\$?)([A-Za-z]{1,3})(\$?)([1-9][0-9]*)$"
)


class AddressError(ValueError):
    """Raised for malformed A1 address tokens."""


class DocumentError(ValueError):
    """Raised when a workbook document violates the schema."""


def column_number(letters: str) -> int:
    """Decode bijective base-26 column letters (A=1, Z=26, AA=27)."""
    n = 0
    for ch in letters:
        n = n * 26 + (ord(ch.upper()) - ord("A") + 1)
    return n


def column_letters(number: int) -> str:
    if number < 1:
        raise AddressError(f"column number must be >= 1, got {number}")
    out = ""
    while number:
        number, rem = divmod(number - 1, 26)
        out = chr(ord("A") + rem) + out
    return out


@dataclass(frozen=True)
class Address:
    """A grid coordinate. sheet=None means "the current/single sheet"."""

    sheet: str | None
    column: int
    row: int

    def __post_init__(self) -> None:
        if self.column < 1 or self.row < 1:
            raise AddressError(f"column and row must be >= 1: {self!r}")

    def render(self) -> str:
        prefix = f"{self.sheet}!" if self.sheet else ""
        return f"{prefix}{column_letters(self.column)}{self.row}"

    def shifted(self, dcol: int, drow: int) -> "Address":
        return Address(self.sheet, self.column + dcol, self.row + drow)


def addr_key(addr: Address) -> tuple[str, int, int]:
    """Reading-order sort key (top to bottom, left to right)."""
    return (addr.sheet or "", addr.row, addr.column)


def parse_address(token: str) -> tuple[Address, bool, bool]:
    """Parse an A1 token, returning the address plus per-axis $ flags."""
    m = _ADDR_RE.match(token)
    if not m:
        raise AddressError(f"malformed address token: {token!r}")
    sheet, col_dollar, letters, row_dollar, row = m.groups()
    column = column_number(letters)
    if column > MAX_COLUMN:
        raise AddressError(f"column out of range in address: {token!r}")
    addr = Address(sheet, column, int(row))
    return addr, bool(col_dollar), bool(row_dollar)


@dataclass(frozen=True)
class Ref:
    """A cell reference with per-axis absolute ($) flags."""

    target: Address
    column_absolute: bool = False
    row_absolute: bool = False

    def render(self, omit_sheet: bool = False) -> str:
        t = self.target
        prefix = "" if omit_sheet or not t.sheet else f"{t.sheet}!"
        cd = "$" if self.column_absolute else ""
        rd = "$" if self.row_absolute else ""
        return f"{prefix}{cd}{column_letters(t.column)}{rd}{t.row}"


def parse_ref(token: str) -> Ref:
    addr, col_abs, row_abs = parse_address(token)
    return Ref(addr, col_abs, row_abs)


class NumFmt(str, Enum):
    GENERAL = "general"
    CURRENCY = "currency"
    PERCENT = "percent"
    INTEGER = "integer"
    FIXED = "fixed"


@dataclass(frozen=True)
class CellFormat:
    input_marker: bool = False
    numfmt: NumFmt = NumFmt.GENERAL
    decimals: int = 0


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Text:
    label: str


@dataclass(frozen=True)
class Formula:
    source: str
    ast: "FormulaAst"


Content = Union[Number, Text, Formula]


@dataclass(frozen=True)
class Cell:
    addr: Address
    content: Content
    format: CellFormat = CellFormat()

    @property
    def is_number(self) -> bool:
        return isinstance(self.content, Number)

    @property
    def is_text(self) -> bool:
        return isinstance(self.content, Text)

    @property
    def is_formula(self) -> bool:
        return isinstance(self.content, Formula)


@dataclass
class Sheet:
    name: str
    cells: dict[Address, Cell] = field(default_factory=dict)


@dataclass
class Workbook:
    """Immutable-after-load grid; safe for concurrent reads."""

    sheets: list[Sheet] = field(default_factory=list)
    config: "AuditConfig | None" = None

    @property
    def sheet_names(self) -> list[str]:
        return [s.name for s in self.sheets]

    def get_sheet(self, name: str) -> Sheet | None:
        for s in self.sheets:
            if s.name == name:
                return s
        return None

    def cell(self, addr: Address) -> Cell | None:
        sheet = self.get_sheet(addr.sheet) if addr.sheet else (
            self.sheets[0] if self.sheets else None
        )
        if sheet is None:
            return None
        return sheet.cells.get(replace(addr, sheet=sheet.name))

    def exists(self, addr: Address) -> bool:
        return self.cell(addr) is not None

    def iter_cells(self) -> Iterator[Cell]:
        for sheet in self.sheets:
            for addr in sorted(sheet.cells, key=addr_key):
                yield sheet.cells[addr]

    def formula_cells(self) -> Iterator[Cell]:
        return (c for c in self.iter_cells() if c.is_formula)

    def cell_count(self) -> int:
        return sum(len(s.cells) for s in self.sheets)

    def content_counts(self) -> dict[str, int]:
        counts = {"number": 0, "text": 0, "formula": 0}
        for cell in self.iter_cells():
            if cell.is_number:
                counts["number"] += 1
            elif cell.is_text:
                counts["text"] += 1
            else:
                counts["formula"] += 1
        return counts

    def bounds(self, sheet_name: str) -> tuple[int, int]:
        """(max column, max row) over non-empty cells; (0, 0) when empty."""
        sheet = self.get_sheet(sheet_name)
        if not sheet or not sheet.cells:
            return (0, 0)
        return (max(a.column for a in sheet.cells),
                max(a.row for a in sheet.cells))


_TOP_KEYS = {"sheets"}
_SHEET_KEYS = {"name", "cells"}
_CONTENT_KEYS = ("number", "text", "formula")
_ENTRY_KEYS = {"addr", "format", *_CONTENT_KEYS}
_FORMAT_KEYS = {"input_marker", "numfmt", "decimals"}


def load_workbook(document: str, config: "AuditConfig | None" = None) -> Workbook:
    """Materialize a workbook document; formulas are parsed eagerly."""
    from .formula import FormulaError, parse_formula

    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid workbook document: {exc}") from exc
    if not isinstance(data, dict):
        raise DocumentError("workbook document must be an object")
    _reject_unknown(data, _TOP_KEYS, "workbook")
    sheets_raw = data.get("sheets")
    if not isinstance(sheets_raw, list):
        raise DocumentError('"sheets" must be an array')

    sheets: list[Sheet] = []
    for sheet_raw in sheets_raw:
        if not isinstance(sheet_raw, dict):
            raise DocumentError("sheet entry must be an object")
        _reject_unknown(sheet_raw, _SHEET_KEYS, "sheet")
        name = sheet_raw.get("name")
        if not isinstance(name, str) or not name:
            raise DocumentError("sheet name must be a non-empty string")
        if any(s.name == name for s in sheets):
            raise DocumentError(f"duplicate sheet name: {name!r}")
        cells_raw = sheet_raw.get("cells")
        if not isinstance(cells_raw, list):
            raise DocumentError(f"sheet {name!r}: \"cells\" must be an array")

        sheet = Sheet(name)
        for entry in cells_raw:
            cell = _load_cell(entry, name, parse_formula, FormulaError)
            if cell.addr in sheet.cells:
                raise DocumentError(
                    f"duplicate address {cell.addr.render()} in sheet {name!r}"
                )
            sheet.cells[cell.addr] = cell
        sheets.append(sheet)

    return Workbook(sheets, config)


def load_workbook_file(path: str, config: "AuditConfig | None" = None) -> Workbook:
    with open(path, encoding="utf-8") as fh:
        return load_workbook(fh.read(), config)


def _load_cell(entry: object, sheet_name: str, parse_formula, formula_error) -> Cell:
    if not isinstance(entry, dict):
        raise DocumentError("cell entry must be an object")
    _reject_unknown(entry, _ENTRY_KEYS, "cell entry")

    addr_text = entry.get("addr")
    if not isinstance(addr_text, str):
        raise DocumentError('cell entry missing "addr"')
    try:
        addr, _, _ = parse_address(addr_text)
    except AddressError as exc:
        raise DocumentError(str(exc)) from exc
    if addr.sheet is not None and addr.sheet != sheet_name:
        raise DocumentError(
            f"cell address {addr_text!r} names a different sheet than {sheet_name!r}"
        )
    addr = replace(addr, sheet=sheet_name)

    present = [k for k in _CONTENT_KEYS if k in entry]
    if len(present) != 1:
        raise DocumentError(
            f"{addr.render()}: exactly one of number/text/formula required, "
            f"got {present or 'none'}"
        )
    kind = present[0]
    raw = entry[kind]
    if kind == "number":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise DocumentError(f"{addr.render()}: number must be numeric")
        content: Content = Number(float(raw))
    elif kind == "text":
        if not isinstance(raw, str):
            raise DocumentError(f"{addr.render()}: text must be a string")
        content = Text(raw)
    else:
        if not isinstance(raw, str) or not raw.startswith("="):
            raise DocumentError(f'{addr.render()}: formula must start with "="')
        try:
            ast = parse_formula(raw)
        except formula_error as exc:
            raise DocumentError(f"{addr.render()}: {exc}") from exc
        content = Formula(raw, ast)

    return Cell(addr, content, _load_format(entry.get("format"), addr))


def _load_format(raw: object, addr: Address) -> CellFormat:
    if raw is None:
        return CellFormat()
    if not isinstance(raw, dict):
        raise DocumentError(f"{addr.render()}: format must be an object")
    _reject_unknown(raw, _FORMAT_KEYS, "format")
    marker = raw.get("input_marker", False)
    if not isinstance(marker, bool):
        raise DocumentError(f"{addr.render()}: input_marker must be a boolean")
    numfmt_raw = raw.get("numfmt", "general")
    try:
        numfmt = NumFmt(numfmt_raw)
    except ValueError:
        raise DocumentError(f"{addr.render()}: unknown numfmt {numfmt_raw!r}") from None
    if "decimals" in raw:
        decimals = raw["decimals"]
        if isinstance(decimals, bool) or not isinstance(decimals, int) or decimals < 0:
            raise DocumentError(f"{addr.render()}: decimals must be a non-negative int")
    else:
        decimals = 2 if numfmt in (NumFmt.CURRENCY, NumFmt.FIXED) else 0
    return CellFormat(marker, numfmt, decimals)


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise DocumentError(f"unknown {where} keys: {', '.join(unknown)}")
