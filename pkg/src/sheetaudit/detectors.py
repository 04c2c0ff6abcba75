"""The twelve audit rules, grouped into four categories, plus the
orchestrator that runs every analysis stage and merges findings.

Rule ids group by category: 1-1..1-3 input data structure,
2-1a/2-1b/2-1c/2-2 semantics, 3-1..3-3 extendibility, 4-1/4-2 formula
integrity. Heuristic rules (2-1b, 2-1c, 2-2, 3-1) mark every finding
they emit so reports can qualify them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .config import AuditConfig
from .engine import (
    DependencyGraph,
    Valuation,
    build_graph,
    evaluate,
)
from .formula import (
    AGGREGATE_FUNCTIONS,
    BinOp,
    CellRef,
    FormulaAst,
    FunCall,
    Percent,
    RangeRef,
    UnaryOp,
    ast_shape,
    format_number,
    literals_of,
)
from .model import Address, Workbook, addr_key
from .structure import (
    Block,
    CloneGroup,
    SlotKind,
    StructureAnalysis,
    analyze_structure,
    arc_blank_run,
    backward_arcs,
    normalize_label,
    resolved_slots,
    simulate_insertion,
)

CATEGORY_INPUT = "Input Data Structure"
CATEGORY_SEMANTICS = "Semantics"
CATEGORY_EXTENDIBILITY = "Extendibility"
CATEGORY_INTEGRITY = "Formula Integrity"

CATEGORIES = (CATEGORY_INPUT, CATEGORY_SEMANTICS,
              CATEGORY_EXTENDIBILITY, CATEGORY_INTEGRITY)


@dataclass(frozen=True)
class ErrorType:
    id: str
    category: str
    name: str
    heuristic: bool


ERROR_TYPES: dict[str, ErrorType] = {
    t.id: t
    for t in (
        ErrorType("1-1", CATEGORY_INPUT, "Hard-coding/jamming", False),
        ErrorType("1-2", CATEGORY_INPUT, "Duplication of input values", False),
        ErrorType("1-3", CATEGORY_INPUT, "Input cells not clearly identified", False),
        ErrorType("2-1a", CATEGORY_SEMANTICS, "Missing cell documentation", False),
        ErrorType("2-1b", CATEGORY_SEMANTICS, "Incorrect cell documentation", True),
        ErrorType("2-1c", CATEGORY_SEMANTICS, "Ambiguous cell documentation", True),
        ErrorType("2-2", CATEGORY_SEMANTICS, "Poor layout for readability", True),
        ErrorType("3-1", CATEGORY_EXTENDIBILITY, "Poor layout for model extension", True),
        ErrorType("3-2", CATEGORY_EXTENDIBILITY, "Poor layout for copy/paste", False),
        ErrorType("3-3", CATEGORY_EXTENDIBILITY,
                  "Poor absolute/relative references for copy/paste", False),
        ErrorType("4-1", CATEGORY_INTEGRITY, "Spurious formulas", False),
        ErrorType("4-2", CATEGORY_INTEGRITY, "Lack of explicit formulas", False),
    )
}


@dataclass
class Finding:
    type: ErrorType
    cells: list[Address]
    message: str
    evidence: dict = field(default_factory=dict)

    @property
    def heuristic(self) -> bool:
        return self.type.heuristic


@dataclass
class AuditResult:
    findings: list[Finding]
    diagnostics: dict


def _finding(type_id: str, cells: list[Address], message: str,
             evidence: dict | None = None) -> Finding:
    cells = sorted(set(cells), key=addr_key)
    if not cells:
        raise ValueError(f"finding {type_id} must cite at least one cell")
    return Finding(ERROR_TYPES[type_id], cells, message, evidence or {})


def _disp(wb: Workbook, addr: Address) -> str:
    if len(wb.sheets) > 1:
        return addr.render()
    return Address(None, addr.column, addr.row).render()


# ---------------------------------------------------------------------------
# Category 1: input data structure


def detect_input_data_structure(wb: Workbook, graph: DependencyGraph,
                                valuation: Valuation,
                                structure: StructureAnalysis,
                                cfg: AuditConfig) -> list[Finding]:
    findings: list[Finding] = []

    # 1-1: constants jammed into formulas (whitelisted absolutes excluded)
    literal_sites: list[tuple[float, Address]] = []
    for cell in wb.formula_cells():
        offending = [v for v in literals_of(cell.content.ast)
                     if not cfg.is_whitelisted(v)]
        if offending:
            shown = ", ".join(format_number(v) for v in offending)
            findings.append(_finding(
                "1-1", [cell.addr],
                f"formula hard-codes: {shown}",
                {"literals": offending},
            ))
            literal_sites.extend((v, cell.addr) for v in offending)

    # 1-2a: one assumption entered in several places
    for value, addrs in _tolerance_clusters(literal_sites, cfg):
        if len(addrs) >= 2:
            findings.append(_finding(
                "1-2", sorted(addrs, key=addr_key),
                f"constant {format_number(value)} is entered in "
                f"{len(addrs)} formulas",
                {"value": value, "via": "duplicated-literal"},
            ))
    input_addrs = {i.addr for i in structure.inputs}
    seen_slot_pairs: set[tuple[Address, ...]] = set()
    for group in structure.groups:
        for slot in group.slots:
            slot_inputs = sorted(
                {r.target for r in slot.refs if r.target in input_addrs},
                key=addr_key)
            for value, addrs in _tolerance_clusters(
                    [(valuation[a], a) for a in slot_inputs
                     if isinstance(valuation.get(a), float)], cfg):
                key = tuple(sorted(addrs, key=addr_key))
                if len(addrs) >= 2 and key not in seen_slot_pairs:
                    seen_slot_pairs.add(key)
                    findings.append(_finding(
                        "1-2", list(key),
                        f"{len(addrs)} input cells hold the same value "
                        f"{format_number(value)} and feed the same slot of "
                        "cloned formulas",
                        {"value": value, "via": "duplicated-input"},
                    ))

    # 1-2b: a constant repeats a value the sheet already computes
    for const_addr, formula_addr in sorted(
            duplicated_input_matches(wb, graph, valuation, cfg).items(),
            key=lambda kv: addr_key(kv[0])):
        findings.append(_finding(
            "1-2", [const_addr, formula_addr],
            f"constant {_disp(wb, const_addr)} equals the value computed at "
            f"{_disp(wb, formula_addr)} without referencing it",
            {"via": "retyped-result", "computed_at": _disp(wb, formula_addr)},
        ))

    # 1-3: inputs a user cannot readily spot
    for inp in structure.inputs:
        if not inp.identified:
            findings.append(_finding(
                "1-3", [inp.addr],
                "input cell is not marked and sits outside any labeled "
                "input section",
            ))
    return findings


def duplicated_input_matches(wb: Workbook, graph: DependencyGraph,
                             valuation: Valuation,
                             cfg: AuditConfig) -> dict[Address, Address]:
    """Number cells whose value equals some computed formula value they do
    not feed. Bare single-reference formulas are mirrors of their source,
    not computations, so they cannot claim a match; whitelisted values are
    ignored. 4-2 skips anything explained here."""
    computed: list[tuple[Address, float]] = []
    for cell in wb.formula_cells():
        if isinstance(cell.content.ast, CellRef):
            continue
        value = valuation.get(cell.addr)
        if isinstance(value, float):
            computed.append((cell.addr, value))
    matches: dict[Address, Address] = {}
    for cell in wb.iter_cells():
        if not cell.is_number or cfg.is_whitelisted(cell.content.value):
            continue
        for formula_addr, value in computed:
            if cell.addr in graph.precedents.get(formula_addr, ()):
                continue
            if cfg.values_close(cell.content.value, value):
                matches[cell.addr] = formula_addr
                break
    return matches


def _tolerance_clusters(sites: list[tuple[float, Address]],
                        cfg: AuditConfig) -> list[tuple[float, set[Address]]]:
    """Group (value, cell) pairs into clusters of mutually-close values."""
    by_value: dict[float, set[Address]] = {}
    for value, addr in sites:
        by_value.setdefault(value, set()).add(addr)
    clusters: list[tuple[float, set[Address]]] = []
    for value in sorted(by_value):
        if clusters and cfg.values_close(clusters[-1][0], value):
            clusters[-1][1].update(by_value[value])
        else:
            clusters.append((value, set(by_value[value])))
    return clusters


# ---------------------------------------------------------------------------
# Category 2: semantics


def detect_semantics(wb: Workbook, graph: DependencyGraph,
                     structure: StructureAnalysis,
                     cfg: AuditConfig) -> list[Finding]:
    findings: list[Finding] = []
    labels = structure.labels
    bmap = structure.block_of

    value_cells = [c for c in wb.iter_cells() if c.is_number or c.is_formula]
    row_labeled = {(bmap[c.addr].id, c.addr.column)
                   for c in value_cells if labels[c.addr].row_label}
    col_labeled = {(bmap[c.addr].id, c.addr.row)
                   for c in value_cells if labels[c.addr].column_label}

    for cell in value_cells:
        assoc = labels[cell.addr]
        block = bmap[cell.addr]
        if assoc.unlabeled:
            findings.append(_finding(
                "2-1a", [cell.addr], "displayed value has no label"))
        elif assoc.row_label is None and (block.id, cell.addr.column) in row_labeled:
            findings.append(_finding(
                "2-1a", [cell.addr],
                "row label missing while neighbouring rows are labeled"))
        elif assoc.column_label is None and (block.id, cell.addr.row) in col_labeled:
            findings.append(_finding(
                "2-1a", [cell.addr],
                "column label missing while neighbouring columns are labeled"))

    for cell in value_cells:
        assoc = labels[cell.addr]
        texts = [t for _, t in filter(None, (assoc.row_label, assoc.column_label))]
        if not texts:
            continue
        cues = {cue: classes for cue, classes in cfg.unit_cues.items()
                if any(cue in t.lower() for t in texts)}
        expected = {cls for classes in cues.values() for cls in classes}
        if expected and cell.format.numfmt.value not in expected:
            findings.append(_finding(
                "2-1b", [cell.addr],
                f"label suggests {'/'.join(sorted(expected))} but the cell "
                f"is formatted as {cell.format.numfmt.value}",
                {"cues": sorted(cues), "expected": sorted(expected),
                 "numfmt": cell.format.numfmt.value},
            ))

        primary = texts[0]
        if normalize_label(primary) in cfg.generic_labels:
            findings.append(_finding(
                "2-1c", [cell.addr],
                f'label "{primary}" is generic and states no unit',
                {"label": primary, "reason": "generic-label"},
            ))
        elif (cell.is_number
              and cell.format.numfmt.value == "general"
              and 0 < cell.content.value <= 1
              and not cues):
            findings.append(_finding(
                "2-1c", [cell.addr],
                f"value {format_number(cell.content.value)} could be a "
                "percentage or an amount; no unit or format disambiguates",
                {"label": primary, "reason": "percent-or-amount"},
            ))

    findings.extend(_detect_readability(wb, graph, structure, cfg))
    return findings


def _detect_readability(wb: Workbook, graph: DependencyGraph,
                        structure: StructureAnalysis,
                        cfg: AuditConfig) -> list[Finding]:
    findings: list[Finding] = []
    metrics = structure.metrics

    if metrics.backward_arc_ratio > cfg.backward_arc_ratio_max:
        cells = []
        for p, d in backward_arcs(graph):
            cells.extend(a for a in (p, d) if wb.exists(a))
        findings.append(_finding(
            "2-2", cells,
            f"{metrics.backward_arc_ratio:.2f} of dependencies flow against "
            "reading order (left to right, top to bottom)",
            {"backward_arc_ratio": metrics.backward_arc_ratio,
             "threshold": cfg.backward_arc_ratio_max},
        ))

    if metrics.max_blank_run > cfg.max_blank_run:
        cells = []
        for p, d in sorted(graph.arcs,
                           key=lambda a: (addr_key(a[0]), addr_key(a[1]))):
            if arc_blank_run(wb, p, d) > cfg.max_blank_run:
                cells.extend(a for a in (p, d) if wb.exists(a))
        findings.append(_finding(
            "2-2", cells,
            f"a dependency spans {metrics.max_blank_run} consecutive blank "
            "rows/columns",
            {"max_blank_run": metrics.max_blank_run,
             "threshold": cfg.max_blank_run},
        ))

    if (metrics.bounding_rows > cfg.screen_rows
            or metrics.bounding_cols > cfg.screen_cols):
        cells = [c.addr for c in wb.iter_cells()
                 if c.addr.row > cfg.screen_rows or c.addr.column > cfg.screen_cols]
        findings.append(_finding(
            "2-2", cells,
            f"content spans {metrics.bounding_rows}x{metrics.bounding_cols} "
            f"cells, beyond one screen of {cfg.screen_rows}x{cfg.screen_cols}",
            {"bounding_rows": metrics.bounding_rows,
             "bounding_cols": metrics.bounding_cols},
        ))

    limit = max(cfg.screen_rows, cfg.screen_cols)
    if metrics.clone_dispersion > limit:
        cells = []
        for g in structure.groups:
            for a, b in zip(g.members, g.members[1:]):
                if max(abs(a.column - b.column), abs(a.row - b.row)) > limit:
                    cells.extend(g.members)
                    break
        findings.append(_finding(
            "2-2", cells,
            "related formulas are far apart "
            f"(dispersion {metrics.clone_dispersion} > {limit})",
            {"clone_dispersion": metrics.clone_dispersion, "threshold": limit},
        ))
    return findings


# ---------------------------------------------------------------------------
# Category 3: extendibility


def detect_extendibility(wb: Workbook, structure: StructureAnalysis,
                         cfg: AuditConfig) -> list[Finding]:
    findings: list[Finding] = []
    findings.extend(_detect_extension_cost(wb, structure, cfg))

    # 3-2: layout defeats copying
    for group in structure.groups:
        if group.translation_consistent:
            continue
        kinds = [s.kind.value for s in group.slots]
        findings.append(_finding(
            "3-2", group.members,
            "formulas share one structure but their references do not move "
            "with the cells; they cannot be copied to a new row/column",
            {"slot_kinds": kinds,
             "members": [_disp(wb, a) for a in group.members]},
        ))
    findings.extend(_detect_parallel_label_breaks(wb, structure))

    # 3-3: $ anchoring would not survive a future paste
    for group in structure.groups:
        if not group.translation_consistent:
            continue  # only judged where the layout permits copying
        violations = _paste_violations(group)
        if violations:
            findings.append(_finding(
                "3-3", group.members,
                "copying these formulas would break: "
                + "; ".join(sorted({reason for _, reason in violations})),
                {"slots": sorted({idx for idx, _ in violations}),
                 "reasons": sorted({reason for _, reason in violations})},
            ))
    return findings


def _paste_violations(group: CloneGroup) -> list[tuple[int, str]]:
    """Slots whose $ flags cannot reproduce every member from any other
    member by translation."""
    violations: list[tuple[int, str]] = []
    members = group.members
    for idx, slot in enumerate(group.slots):
        flags = {(r.column_absolute, r.row_absolute) for r in slot.refs}
        if len(flags) > 1:
            violations.append((idx, "inconsistent anchoring across the group"))
            continue
        col_abs, row_abs = next(iter(flags))
        for i in range(len(members)):
            for j in range(len(members)):
                if i == j:
                    continue
                dcol = members[j].column - members[i].column
                drow = members[j].row - members[i].row
                src = slot.refs[i].target
                predicted = (src.column if col_abs else src.column + dcol,
                             src.row if row_abs else src.row + drow)
                actual = slot.refs[j].target
                if predicted != (actual.column, actual.row):
                    if slot.kind is SlotKind.SHARED:
                        violations.append(
                            (idx, "a shared reference is not anchored with $ "
                                  "on the copy axis"))
                    else:
                        violations.append(
                            (idx, "a varying reference is anchored with $ "
                                  "on the copy axis"))
                    break
            else:
                continue
            break
    return violations


def _detect_parallel_label_breaks(wb: Workbook,
                                  structure: StructureAnalysis) -> list[Finding]:
    """Same label text heading several value cells whose formulas do not
    form one translation-consistent group."""
    label_cells: dict[str, set[Address]] = {}
    headed: dict[str, set[Address]] = {}
    for subject, assoc in structure.labels.items():
        for side in (assoc.row_label, assoc.column_label):
            if side is None:
                continue
            label_addr, text = side
            norm = normalize_label(text)
            label_cells.setdefault(norm, set()).add(label_addr)
            headed.setdefault(norm, set()).add(subject)

    findings = []
    for norm in sorted(label_cells):
        if len(label_cells[norm]) < 2:
            continue
        formulas = sorted((a for a in headed[norm]
                           if (c := wb.cell(a)) is not None and c.is_formula),
                          key=addr_key)
        if len(formulas) < 2:
            continue
        covered = any(set(formulas) <= set(g.members) for g in structure.groups)
        if not covered:
            findings.append(_finding(
                "3-2", formulas,
                f'cells labeled "{norm}" in parallel do not share a '
                "copyable formula structure",
                {"label": norm},
            ))
    return findings


def _detect_extension_cost(wb: Workbook, structure: StructureAnalysis,
                           cfg: AuditConfig) -> list[Finding]:
    """3-1: simulate adding one more member along each clone family's copy
    axis and count what that costs: a section copy, full-grid insertions to
    grow input lists the family reads, and formula edits no translation can
    produce. Splitting a neighbouring block or needing manual edits flags
    the layout."""
    scenarios: dict[tuple[str, tuple[int, int]], list[CloneGroup]] = {}
    for g in structure.groups:
        if g.stride is not None and g.axis in ("col", "row"):
            scenarios.setdefault((g.axis, g.stride), []).append(g)

    findings = []
    for (axis, stride) in sorted(scenarios):
        groups = scenarios[(axis, stride)]
        consistent_members = {
            a for g in groups if g.translation_consistent for a in g.members
        }
        last_blocks: dict[int, Block] = {}
        for g in groups:
            block = structure.block_of[g.members[-1]]
            last_blocks[block.id] = block

        manual_edits: list[tuple[Address, Address]] = []
        insertion_keys: dict[tuple[int, str, int], Block] = {}
        blocked: dict[int, Block] = {}

        for block in sorted(last_blocks.values(), key=lambda b: b.id):
            for addr in block.members:
                cell = wb.cell(addr)
                if not cell.is_formula:
                    continue
                new_pos = _shift_checked(addr, stride)
                if new_pos is None:
                    continue
                neighbour = wb.cell(new_pos)
                if neighbour is not None:
                    if (neighbour.is_formula
                            and ast_shape(neighbour.content.ast)
                            == ast_shape(cell.content.ast)):
                        continue  # interior member, nothing new to create
                    nb = structure.block_of[new_pos]
                    blocked[nb.id] = nb  # extension footprint is occupied
                    continue
                if addr in consistent_members:
                    continue  # paste reproduces it
                partner_pos = _shift_checked(addr, (-stride[0], -stride[1]))
                partner = wb.cell(partner_pos) if partner_pos else None
                if (partner is None or not partner.is_formula
                        or ast_shape(partner.content.ast) != ast_shape(cell.content.ast)):
                    manual_edits.append((addr, new_pos))
                    continue
                auto, growth = _pairwise_extension(wb, partner, cell, stride)
                if auto:
                    continue
                manual_edits.append((addr, new_pos))
                for target, delta in growth:
                    key = _growth_insertion(wb, structure, target, delta)
                    if key is not None:
                        insertion_keys[(key[0].id, key[1], key[2])] = key[0]

        impacts: dict[int, Block] = dict(blocked)
        insertions = []
        for (block_id, ins_axis, position), block in sorted(insertion_keys.items()):
            impact = simulate_insertion(wb, structure.blocks, structure.groups,
                                        block, ins_axis, position)
            for b in impact.intersected:
                impacts[b.id] = b
            insertions.append({
                "block": block.id, "axis": ins_axis, "position": position,
                "splits": [b.id for b in impact.intersected],
            })

        if not manual_edits and not impacts:
            continue
        steps = 1 + len(insertions) + len(manual_edits)  # copy + inserts + edits
        cells = [src for src, _ in manual_edits]
        for b in impacts.values():
            cells.extend(b.members)
        findings.append(_finding(
            "3-1", cells,
            f"adding one more section along this {axis} family takes "
            f"{steps} steps and would split {len(impacts)} neighbouring "
            "block(s)",
            {
                "steps": steps,
                "manual_edits": [f"{_disp(wb, s)}->{_disp(wb, n)}"
                                 for s, n in manual_edits],
                "insertions": insertions,
                "split_blocks": sorted(impacts),
                "axis": axis,
                "stride": list(stride),
            },
        ))
    return findings


def _shift_checked(addr: Address, delta: tuple[int, int]) -> Address | None:
    col, row = addr.column + delta[0], addr.row + delta[1]
    if col < 1 or row < 1:
        return None
    return Address(addr.sheet, col, row)


def _pairwise_extension(wb: Workbook, partner, cell, stride):
    """Compare a cell against its previous-family-member: is the next copy
    producible by translating `cell` by the stride? Returns (auto, growth)
    where growth lists (input target, progression delta) of slots whose
    referenced input list must grow elsewhere."""
    auto = True
    growth: list[tuple[Address, tuple[int, int]]] = []
    for prev, cur in zip(resolved_slots(partner), resolved_slots(cell)):
        delta = (cur.target.column - prev.target.column,
                 cur.target.row - prev.target.row)
        masked = (0 if cur.column_absolute else stride[0],
                  0 if cur.row_absolute else stride[1])
        if delta == masked:
            continue
        auto = False
        if delta not in ((0, 0), stride):
            growth.append((cur.target, delta))
    return auto, growth


def _growth_insertion(wb: Workbook, structure: StructureAnalysis,
                      target: Address, delta: tuple[int, int]):
    """Where would the referenced input list grow? Returns
    (block, axis, position) for a band insertion, or None."""
    if delta[0] != 0 and delta[1] != 0:
        return None  # diagonal progressions have no single band
    if not wb.exists(target):
        return None
    next_pos = _shift_checked(target, delta)
    if next_pos is None or wb.exists(next_pos):
        return None
    block = structure.block_of[target]
    if delta[1] != 0:
        axis, position = "row", next_pos.row
        lo, hi = block.min_row, block.max_row
    else:
        axis, position = "column", next_pos.column
        lo, hi = block.min_col, block.max_col
    if not lo <= position <= hi + 1:
        return None
    return block, axis, position


# ---------------------------------------------------------------------------
# Category 4: formula integrity


def detect_formula_integrity(wb: Workbook, graph: DependencyGraph,
                             valuation: Valuation,
                             cfg: AuditConfig) -> list[Finding]:
    findings: list[Finding] = []

    for cell in wb.formula_cells():
        reasons = _spurious_aggregate_uses(cell.content.ast)
        if reasons:
            findings.append(_finding(
                "4-1", [cell.addr],
                "; ".join(sorted(set(reasons))),
                {"reasons": sorted(set(reasons))},
            ))

    findings.extend(_detect_unexplained_constants(wb, graph, valuation, cfg))
    return findings


def _spurious_aggregate_uses(ast: FormulaAst) -> list[str]:
    reasons: list[str] = []

    def walk(node: FormulaAst) -> None:
        if isinstance(node, FunCall):
            if node.name in AGGREGATE_FUNCTIONS and len(node.args) == 1:
                arg = node.args[0]
                if isinstance(arg, RangeRef):
                    if arg.start.target == arg.end.target:
                        reasons.append(
                            f"{node.name} aggregates a single-cell range")
                elif isinstance(arg, FunCall) and arg.name in AGGREGATE_FUNCTIONS:
                    reasons.append(
                        f"{node.name} redundantly wraps another aggregate")
                else:
                    reasons.append(
                        f"{node.name} is applied to a single scalar "
                        "expression instead of a range")
            for arg in node.args:
                walk(arg)
        elif isinstance(node, BinOp):
            walk(node.lhs)
            walk(node.rhs)
        elif isinstance(node, (UnaryOp, Percent)):
            walk(node.operand)

    walk(ast)
    return reasons


def synthesis_skipped(wb: Workbook, cfg: AuditConfig) -> bool:
    return wb.cell_count() > cfg.synthesis_cell_cap


def _detect_unexplained_constants(wb: Workbook, graph: DependencyGraph,
                                  valuation: Valuation,
                                  cfg: AuditConfig) -> list[Finding]:
    """4-2: search for a bounded arithmetic witness (k-ary sum/product of
    2..N distinct other cells) reproducing each entered constant."""
    if synthesis_skipped(wb, cfg):
        return []
    explained = set(duplicated_input_matches(wb, graph, valuation, cfg))

    pool = [(c.addr, valuation[c.addr]) for c in wb.iter_cells()
            if isinstance(valuation.get(c.addr), float)]
    formula_addrs = {c.addr for c in wb.formula_cells()}

    findings = []
    for cell in wb.iter_cells():
        if not cell.is_number:
            continue
        if cell.addr in explained or cfg.is_whitelisted(cell.content.value):
            continue
        witness = _synthesize(cell.content.value,
                              [(a, v) for a, v in pool if a != cell.addr], cfg)
        if witness is None:
            continue
        op, operands = witness
        uses_formula = any(a in formula_addrs for a, _ in operands)
        expr = op.join(_disp(wb, a) for a, _ in operands)
        message = (f"entered constant equals {expr}, a calculation the "
                   "sheet does not carry out")
        if uses_formula:
            message += " (based on intermediate computed values)"
        findings.append(_finding(
            "4-2", [cell.addr], message,
            {
                "witness": expr,
                "op": op,
                "operands": [_disp(wb, a) for a, _ in operands],
                "operand_values": [v for _, v in operands],
                "escalated": uses_formula,
            },
        ))
    return findings


def _synthesize(target: float, pool: list[tuple[Address, float]],
                cfg: AuditConfig):
    """First witness in canonical order: size ascending, then cell order,
    then operator order."""
    pool = sorted(pool, key=lambda item: addr_key(item[0]))
    for k in range(2, cfg.synthesis_max_operands + 1):
        for combo in combinations(pool, k):
            for op in cfg.synthesis_ops:
                if op == "+":
                    value = sum(v for _, v in combo)
                else:
                    value = 1.0
                    for _, v in combo:
                        value *= v
                if cfg.values_close(target, value):
                    return op, list(combo)
    return None


# ---------------------------------------------------------------------------
# Orchestration


def run_all(wb: Workbook, cfg: AuditConfig | None = None) -> AuditResult:
    """Build the graph, evaluate, analyze structure, run all four rule
    groups, and return findings sorted by (type id, first cell)."""
    cfg = cfg or wb.config or AuditConfig()
    graph = build_graph(wb)
    valuation = evaluate(wb, graph)
    structure = analyze_structure(wb, graph, cfg)

    findings: list[Finding] = []
    findings += detect_input_data_structure(wb, graph, valuation, structure, cfg)
    findings += detect_semantics(wb, graph, structure, cfg)
    findings += detect_extendibility(wb, structure, cfg)
    findings += detect_formula_integrity(wb, graph, valuation, cfg)
    findings.sort(key=lambda f: (f.type.id, addr_key(f.cells[0]), f.message))

    skipped = []
    if synthesis_skipped(wb, cfg):
        skipped.append(
            f"synthesis skipped: {wb.cell_count()} cells exceed the cap of "
            f"{cfg.synthesis_cell_cap}")

    metrics = structure.metrics
    diagnostics = {
        "layout_metrics": {
            "backward_arc_ratio": metrics.backward_arc_ratio,
            "max_blank_run": metrics.max_blank_run,
            "bounding_rows": metrics.bounding_rows,
            "bounding_cols": metrics.bounding_cols,
            "clone_dispersion": metrics.clone_dispersion,
        },
        "skipped": skipped,
        "human_review": [
            "label-correctness beyond unit/format contradictions (a value "
            "labeled as something it is not) needs human review",
        ],
        "notes": [
            "readability and extension thresholds are heuristic defaults; "
            "override them in the audit config where house standards exist",
        ],
    }
    return AuditResult(findings, diagnostics)
