"""Aggregation of findings into per-type records (existence flags and
cell error rates) and rendering to human text or a canonical machine
document.

CER denominator: non-empty content cells (numbers + text + formulas).
The machine format is key-sorted JSON with CER at fixed 6-decimal
precision, byte-identical across runs for equal reports.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .detectors import ERROR_TYPES, CATEGORIES, ErrorType, Finding
from .model import Address, Workbook

REPORT_VERSION = 1


@dataclass
class TypeRecord:
    type: ErrorType
    exists: int
    finding_count: int
    affected_cells: int
    cer: float


@dataclass
class Report:
    mode: str  # "exists" | "cer"
    records: list[TypeRecord]
    findings: list[Finding]
    workbook_summary: dict
    denominator: int
    diagnostics: dict


def summarize(findings: list[Finding], wb: Workbook, mode: str = "exists",
              diagnostics: dict | None = None,
              only: list[str] | None = None) -> Report:
    """Aggregate findings per type. Affected cells are the deduplicated
    union of each finding's cells; in exists mode the CER column is still
    computed but informational."""
    if mode not in ("exists", "cer"):
        raise ValueError(f"unknown counting mode {mode!r}")
    denominator = wb.cell_count()
    type_ids = [tid for tid in ERROR_TYPES if only is None or tid in only]

    records = []
    for tid in type_ids:
        of_type = [f for f in findings if f.type.id == tid]
        cells: set[Address] = set()
        for f in of_type:
            cells.update(f.cells)
        cer = len(cells) / denominator if denominator else 0.0
        records.append(TypeRecord(
            type=ERROR_TYPES[tid],
            exists=1 if of_type else 0,
            finding_count=len(of_type),
            affected_cells=len(cells),
            cer=cer,
        ))

    counts = wb.content_counts()
    summary = {
        "cells": wb.cell_count(),
        "numbers": counts["number"],
        "texts": counts["text"],
        "formulas": counts["formula"],
        "sheets": wb.sheet_names,
    }
    return Report(mode, records, list(findings), summary, denominator,
                  diagnostics or {})


def render(report: Report, fmt: str = "text") -> str:
    """Render a report; the returned string always ends with a newline."""
    if fmt == "text":
        return render_text(report)
    if fmt == "machine":
        return render_machine(report)
    raise ValueError(f"unknown format {fmt!r}")


def _display(addr: Address, multi_sheet: bool) -> str:
    if multi_sheet:
        return addr.render()
    return Address(None, addr.column, addr.row).render()


def render_text(report: Report) -> str:
    multi = len(report.workbook_summary["sheets"]) > 1
    s = report.workbook_summary
    mode_note = ("existence flags (cer shown for information)"
                 if report.mode == "exists" else "cell error rate")
    lines = [
        "sheetaudit report",
        f"workbook: {s['cells']} cells ({s['formulas']} formula, "
        f"{s['numbers']} number, {s['texts']} text), {len(s['sheets'])} sheet(s)",
        f"counting mode: {mode_note}",
        f"cer denominator: {report.denominator} non-empty content cells",
        "",
    ]
    by_category: dict[str, list[TypeRecord]] = {}
    for rec in report.records:
        by_category.setdefault(rec.type.category, []).append(rec)
    for category in CATEGORIES:
        if category not in by_category:
            continue
        lines.append(category)
        for rec in by_category[category]:
            status = "EXISTS" if rec.exists else "none"
            line = (f"{rec.type.id}  {rec.type.name}  {status}  "
                    f"findings={rec.finding_count}  cells={rec.affected_cells}  "
                    f"cer={rec.cer:.6f}")
            if rec.type.heuristic:
                line += "  [heuristic]"
            lines.append(line)
        lines.append("")

    if report.findings:
        lines.append("findings:")
        for f in report.findings:
            cells = ",".join(_display(a, multi) for a in f.cells)
            tag = " [heuristic]" if f.heuristic else ""
            lines.append(f"{f.type.id}  {cells}  {f.message}{tag}")
        lines.append("")

    diag = report.diagnostics
    if diag:
        lines.append("diagnostics:")
        metrics = diag.get("layout_metrics", {})
        if metrics:
            rendered = "  ".join(f"{k}={_fmt_metric(v)}"
                                 for k, v in sorted(metrics.items()))
            lines.append(f"layout: {rendered}")
        for note in diag.get("skipped", ()):
            lines.append(f"skipped: {note}")
        for note in diag.get("human_review", ()):
            lines.append(f"human review: {note}")
        for note in diag.get("notes", ()):
            lines.append(f"note: {note}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def _fmt_metric(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def render_machine(report: Report) -> str:
    multi = len(report.workbook_summary["sheets"]) > 1
    payload = {
        "report_version": REPORT_VERSION,
        "count_mode": report.mode,
        "workbook": report.workbook_summary,
        "cer_denominator": report.denominator,
        "types": {
            rec.type.id: {
                "category": rec.type.category,
                "name": rec.type.name,
                "heuristic": rec.type.heuristic,
                "exists": rec.exists,
                "finding_count": rec.finding_count,
                "affected_cells": rec.affected_cells,
                "cer": round(rec.cer, 6),
            }
            for rec in report.records
        },
        "findings": [
            {
                "type": f.type.id,
                "cells": [_display(a, multi) for a in f.cells],
                "message": f.message,
                "heuristic": f.heuristic,
                "evidence": f.evidence,
            }
            for f in report.findings
        ],
        "diagnostics": report.diagnostics,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False) + "\n"
