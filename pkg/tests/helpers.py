"""Shared fixture loading for the test suite."""
from __future__ import annotations

import json
from pathlib import Path

from sheetaudit import AuditConfig, Workbook, load_workbook, run_all, summarize

FIXTURES = Path(__file__).parent / "fixtures"

FIXTURE_NAMES = [
    "jammed_volume", "duplicated_margin", "missing_labels", "ambiguous_labels", "wall_bid_model", "switched_headings", "row_column_mismatch",
    "spurious", "spurious_control", "empty",
]


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.wb"


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


def fixture_doc(name: str) -> dict:
    return json.loads(fixture_text(name))


def load_fixture(name: str, cfg: AuditConfig | None = None) -> Workbook:
    return load_workbook(fixture_text(name), cfg)


def load_doc(doc: dict, cfg: AuditConfig | None = None) -> Workbook:
    return load_workbook(json.dumps(doc), cfg)


def mutate_cell(doc: dict, addr: str, **changes) -> dict:
    """Return doc with one cell entry updated (format keys merge)."""
    for cell in doc["sheets"][0]["cells"]:
        if cell["addr"] == addr:
            fmt = changes.pop("format", None)
            if fmt is not None:
                merged = dict(cell.get("format", {}))
                for key, value in fmt.items():
                    if value is None:
                        merged.pop(key, None)
                    else:
                        merged[key] = value
                cell["format"] = merged
            cell.update(changes)
            return doc
    raise KeyError(addr)


def flags_of(wb: Workbook, cfg: AuditConfig | None = None) -> dict[str, int]:
    result = run_all(wb, cfg)
    report = summarize(result.findings, wb)
    return {rec.type.id: rec.exists for rec in report.records}


def findings_of(wb: Workbook, type_id: str, cfg: AuditConfig | None = None):
    return [f for f in run_all(wb, cfg).findings if f.type.id == type_id]


def cell_names(finding) -> list[str]:
    return [a.render().split("!")[-1] for a in finding.cells]
