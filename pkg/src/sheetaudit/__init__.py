"""sheetaudit: static auditor for qualitative design flaws in workbooks."""

from .config import AuditConfig, ConfigError, load_config
from .detectors import ERROR_TYPES, AuditResult, Finding, run_all
from .engine import (
    DependencyGraph,
    ErrorKind,
    ErrorValue,
    Valuation,
    build_graph,
    evaluate,
    evaluate_ast,
)
from .formula import (
    FormulaError,
    ast_shape,
    literals_of,
    parse_formula,
    print_formula,
    refs_of,
    translate_refs,
)
from .model import (
    Address,
    AddressError,
    Cell,
    CellFormat,
    DocumentError,
    NumFmt,
    Ref,
    Workbook,
    load_workbook,
    load_workbook_file,
    parse_address,
)
from .report import Report, render, summarize
from .structure import (
    Block,
    CloneGroup,
    LabelAssociation,
    LayoutMetrics,
    analyze_structure,
    associate_label,
    classify_inputs,
    clone_groups,
    detect_blocks,
    layout_metrics,
    simulate_insertion,
)

__version__ = "0.1.0"

__all__ = [
    "Address",
    "AddressError",
    "AuditConfig",
    "AuditResult",
    "Block",
    "Cell",
    "CellFormat",
    "CloneGroup",
    "ConfigError",
    "DependencyGraph",
    "DocumentError",
    "ERROR_TYPES",
    "ErrorKind",
    "ErrorValue",
    "Finding",
    "FormulaError",
    "LabelAssociation",
    "LayoutMetrics",
    "NumFmt",
    "Ref",
    "Report",
    "Valuation",
    "Workbook",
    "analyze_structure",
    "associate_label",
    "ast_shape",
    "build_graph",
    "classify_inputs",
    "clone_groups",
    "detect_blocks",
    "evaluate",
    "evaluate_ast",
    "layout_metrics",
    "literals_of",
    "load_config",
    "load_workbook",
    "load_workbook_file",
    "parse_address",
    "parse_formula",
    "print_formula",
    "refs_of",
    "render",
    "run_all",
    "simulate_insertion",
    "summarize",
    "translate_refs",
]
