"""Command-line interface.

Subcommands:
  lint <file>   run the audit (--config, --count-mode, --format, --only)
  eval <file>   print evaluated cell values (--cell A1)
  parse         print the canonical form and node outline of a formula

Exit codes: 0 = audit ran, no findings; 1 = findings exist;
2 = input/parse/config error.
"""
from __future__ import annotations

import argparse
import sys

from .config import AuditConfig, ConfigError, load_config
from .detectors import ERROR_TYPES, run_all
from .engine import ErrorValue, evaluate
from .formula import FormulaError, format_number, parse_formula, print_formula
from .model import (
    Address,
    AddressError,
    DocumentError,
    addr_key,
    load_workbook_file,
    parse_address,
)
from .report import render, summarize


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sheetaudit",
        description="Audit a workbook document for qualitative design flaws.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    lint = sub.add_parser("lint", help="audit a workbook document")
    lint.add_argument("file", help="workbook document path")
    lint.add_argument("--config", help="audit config document path")
    lint.add_argument("--count-mode", choices=("exists", "cer"),
                      default="exists", dest="count_mode")
    lint.add_argument("--format", choices=("text", "machine"),
                      default="text", dest="fmt")
    lint.add_argument("--only", help="comma-separated type ids to keep")

    ev = sub.add_parser("eval", help="print evaluated cell values")
    ev.add_argument("file", help="workbook document path")
    ev.add_argument("--cell", help="single A1 address to print")

    pa = sub.add_parser("parse", help="parse one formula")
    pa.add_argument("--formula", required=True, help='formula text, e.g. "=A1*2"')

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse prints its own diagnostics
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        if ns.command == "lint":
            return _cmd_lint(ns)
        if ns.command == "eval":
            return _cmd_eval(ns)
        return _cmd_parse(ns)
    except (DocumentError, ConfigError, FormulaError, AddressError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


def _cmd_lint(ns: argparse.Namespace) -> int:
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            cfg = load_config(fh.read())
    else:
        cfg = AuditConfig()

    only = None
    if ns.only:
        only = [tid.strip() for tid in ns.only.split(",") if tid.strip()]
        unknown = [tid for tid in only if tid not in ERROR_TYPES]
        if unknown:
            raise ConfigError(f"unknown type ids in --only: {', '.join(unknown)}")

    wb = load_workbook_file(ns.file, cfg)
    result = run_all(wb, cfg)
    findings = result.findings
    if only is not None:
        findings = [f for f in findings if f.type.id in only]
    report = summarize(findings, wb, ns.count_mode,
                       diagnostics=result.diagnostics, only=only)
    sys.stdout.write(render(report, ns.fmt))
    return 1 if any(rec.exists for rec in report.records) else 0


def _format_value(value: object) -> str:
    if value is None:
        return "(blank)"
    if isinstance(value, ErrorValue):
        return str(value)
    if isinstance(value, float):
        return format_number(value)
    return f'"{value}"'


def _cmd_eval(ns: argparse.Namespace) -> int:
    wb = load_workbook_file(ns.file)
    valuation = evaluate(wb)
    multi = len(wb.sheets) > 1

    def show(addr: Address) -> str:
        return addr.render() if multi else Address(None, addr.column, addr.row).render()

    if ns.cell:
        addr, _, _ = parse_address(ns.cell)
        if addr.sheet is None and wb.sheets:
            addr = Address(wb.sheets[0].name, addr.column, addr.row)
        print(f"{show(addr)} = {_format_value(valuation.get(addr))}")
        return 0
    for addr in sorted(valuation, key=addr_key):
        print(f"{show(addr)} = {_format_value(valuation[addr])}")
    return 0


def _cmd_parse(ns: argparse.Namespace) -> int:
    ast = parse_formula(ns.formula)
    print(print_formula(ast))
    for line in _outline(ast, 0):
        print(line)
    return 0


def _outline(node, depth: int) -> list[str]:
    from . import formula as f

    pad = "  " * depth
    if isinstance(node, f.NumberLit):
        return [f"{pad}NumberLit {format_number(node.value)}"]
    if isinstance(node, f.TextLit):
        return [f'{pad}TextLit "{node.value}"']
    if isinstance(node, f.CellRef):
        return [f"{pad}CellRef {node.ref.render()}"]
    if isinstance(node, f.RangeRef):
        return [f"{pad}RangeRef {node.start.render()}:{node.end.render(omit_sheet=True)}"]
    if isinstance(node, f.DanglingRef):
        return [f"{pad}DanglingRef"]
    if isinstance(node, f.FunCall):
        lines = [f"{pad}FunCall {node.name}"]
        for arg in node.args:
            lines.extend(_outline(arg, depth + 1))
        return lines
    if isinstance(node, f.BinOp):
        return [f"{pad}BinOp {node.op}",
                *_outline(node.lhs, depth + 1),
                *_outline(node.rhs, depth + 1)]
    if isinstance(node, f.UnaryOp):
        return [f"{pad}UnaryOp {node.op}", *_outline(node.operand, depth + 1)]
    if isinstance(node, f.Percent):
        return [f"{pad}Percent", *_outline(node.operand, depth + 1)]
    raise TypeError(f"not a formula node: {node!r}")
