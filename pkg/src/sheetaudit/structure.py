"""Structural facts the detectors consume: blocks, label association,
input classification, clone groups with translation verdicts, layout
metrics, and row/column insertion simulation.

Blocks are 4-connected components of non-empty cells, so a fully blank
row or column separates sections. Clone groups collect formula cells
that are identical up to the addresses inside their references.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .config import AuditConfig
from .engine import DependencyGraph, referenced_addresses, resolve_ref
from .formula import TRIVIAL_SHAPE, ast_shape, refs_of
from .model import Address, Cell, Ref, Workbook, addr_key


@dataclass(frozen=True)
class Block:
    id: int
    sheet: str
    min_col: int
    min_row: int
    max_col: int
    max_row: int
    members: tuple[Address, ...]

    def contains_row(self, row: int) -> bool:
        return self.min_row <= row <= self.max_row

    def contains_col(self, col: int) -> bool:
        return self.min_col <= col <= self.max_col


@dataclass(frozen=True)
class LabelAssociation:
    subject: Address
    row_label: tuple[Address, str] | None
    column_label: tuple[Address, str] | None

    @property
    def unlabeled(self) -> bool:
        return self.row_label is None and self.column_label is None


class SlotKind(Enum):
    SHARED = "shared"
    VARYING = "varying"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class CloneSlot:
    kind: SlotKind
    refs: tuple[Ref, ...]  # one resolved ref per member, member order


@dataclass
class CloneGroup:
    shape: str
    members: list[Address]
    slots: list[CloneSlot]
    translation_consistent: bool
    axis: str  # "col" | "row" | "diag" | "mixed"
    stride: tuple[int, int] | None  # uniform consecutive member offset


@dataclass
class LayoutMetrics:
    backward_arc_ratio: float
    max_blank_run: int
    bounding_rows: int
    bounding_cols: int
    clone_dispersion: int


@dataclass(frozen=True)
class InputCell:
    addr: Address
    identified: bool
    via: str  # "marker" | "section" | ""


@dataclass
class InsertionImpact:
    target_block: Block
    axis: str
    position: int
    intersected: list[Block]
    manual_edits: list[tuple[Address, Address]]  # (last member, new cell)


@dataclass
class StructureAnalysis:
    blocks: list[Block]
    block_of: dict[Address, Block]
    labels: dict[Address, LabelAssociation]  # value-displaying cells only
    inputs: list[InputCell]
    groups: list[CloneGroup]
    metrics: LayoutMetrics


def detect_blocks(wb: Workbook) -> list[Block]:
    """Partition non-empty cells into 4-connected components per sheet,
    ordered by (min row, min col)."""
    raw: list[tuple[int, list[Address]]] = []
    for index, sheet in enumerate(wb.sheets):
        remaining = set(sheet.cells)
        for seed in sorted(sheet.cells, key=addr_key):
            if seed not in remaining:
                continue
            members = [seed]
            remaining.discard(seed)
            frontier = [seed]
            while frontier:
                addr = frontier.pop()
                for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    col, row = addr.column + dc, addr.row + dr
                    if col < 1 or row < 1:
                        continue
                    nb = Address(sheet.name, col, row)
                    if nb in remaining:
                        remaining.discard(nb)
                        members.append(nb)
                        frontier.append(nb)
            raw.append((index, members))

    raw.sort(key=lambda item: (item[0],
                               min(a.row for a in item[1]),
                               min(a.column for a in item[1])))
    blocks = []
    for block_id, (index, members) in enumerate(raw):
        members = tuple(sorted(members, key=addr_key))
        blocks.append(Block(
            id=block_id,
            sheet=wb.sheets[index].name,
            min_col=min(a.column for a in members),
            min_row=min(a.row for a in members),
            max_col=max(a.column for a in members),
            max_row=max(a.row for a in members),
            members=members,
        ))
    return blocks


def block_map(blocks: list[Block]) -> dict[Address, Block]:
    return {addr: block for block in blocks for addr in block.members}


def associate_label(wb: Workbook, blocks: list[Block],
                    addr: Address) -> LabelAssociation:
    return _associate(wb, block_map(blocks), addr)


def _associate(wb: Workbook, bmap: dict[Address, Block],
               addr: Address) -> LabelAssociation:
    block = bmap.get(addr)
    if block is None:
        raise ValueError(f"{addr.render()} is empty; labels apply to cells")
    row_label = None
    for col in range(addr.column - 1, block.min_col - 1, -1):
        cand = Address(addr.sheet, col, addr.row)
        cell = wb.cell(cand)
        if cell is not None and bmap.get(cand) is block and cell.is_text:
            row_label = (cand, cell.content.label)
            break
    column_label = None
    for row in range(addr.row - 1, block.min_row - 1, -1):
        cand = Address(addr.sheet, addr.column, row)
        cell = wb.cell(cand)
        if cell is not None and bmap.get(cand) is block and cell.is_text:
            column_label = (cand, cell.content.label)
            break
    return LabelAssociation(addr, row_label, column_label)


def normalize_label(text: str) -> str:
    return text.strip().rstrip(":").strip().lower()


def block_section_label(wb: Workbook, block: Block) -> str | None:
    """Text of the block's topmost label cell (reading order), if any."""
    for addr in block.members:  # already in reading order
        cell = wb.cell(addr)
        if cell is not None and cell.is_text:
            return cell.content.label
    return None


def classify_inputs(wb: Workbook, graph: DependencyGraph, blocks: list[Block],
                    cfg: AuditConfig) -> list[InputCell]:
    """Input cell = constant number consumed by at least one formula.
    It counts as identified when it carries the input marker or sits in a
    block whose topmost label names an input section (either suffices)."""
    bmap = block_map(blocks)
    out: list[InputCell] = []
    for cell in wb.iter_cells():
        if not cell.is_number:
            continue
        if not graph.dependents.get(cell.addr):
            continue
        if cell.format.input_marker:
            out.append(InputCell(cell.addr, True, "marker"))
            continue
        block = bmap[cell.addr]
        section = block_section_label(wb, block)
        if section is not None:
            norm = normalize_label(section)
            if any(word in norm for word in cfg.input_section_labels):
                out.append(InputCell(cell.addr, True, "section"))
                continue
        out.append(InputCell(cell.addr, False, ""))
    return out


def resolved_slots(cell: Cell) -> list[Ref]:
    sheet = cell.addr.sheet
    return [Ref(resolve_ref(r, sheet), r.column_absolute, r.row_absolute)
            for r in refs_of(cell.content.ast)]


def _classify_slots(wb: Workbook, members: list[Address]) -> list[CloneSlot]:
    per_member = [resolved_slots(wb.cell(a)) for a in members]
    slots: list[CloneSlot] = []
    for i in range(len(per_member[0])):
        refs = tuple(per_member[m][i] for m in range(len(members)))
        targets = [r.target for r in refs]
        if all(t == targets[0] for t in targets):
            kind = SlotKind.SHARED
        elif len({t.sheet for t in targets}) == 1 and len({
            (t.column - m.column, t.row - m.row)
            for t, m in zip(targets, members)
        }) == 1:
            kind = SlotKind.VARYING
        else:
            kind = SlotKind.INCONSISTENT
        slots.append(CloneSlot(kind, refs))
    return slots


def _chain_split(targets: dict[Address, set[Address]],
                 addrs: list[Address]) -> list[list[Address]]:
    """Split same-shape cells so that no unit contains a cell referencing
    another cell of the unit: chained cells are pipelines, not clones."""
    units: list[list[Address]] = []
    for addr in addrs:
        for unit in units:
            if not any(other in targets[addr] or addr in targets[other]
                       for other in unit):
                unit.append(addr)
                break
        else:
            units.append([addr])
    return units


def clone_groups(wb: Workbook, blocks: list[Block] | None = None) -> list[CloneGroup]:
    """Maximal groups (>= 2 members) of formula cells with equal shape.

    Bare single-reference formulas are mirrors rather than computations;
    they only group across blocks, and any cross-block merge must keep
    every slot consistent, so unrelated mirrors never glue together.
    """
    if blocks is None:
        blocks = detect_blocks(wb)
    bmap = block_map(blocks)

    classes: dict[str, list[Address]] = {}
    targets: dict[Address, set[Address]] = {}
    for cell in wb.formula_cells():
        if not refs_of(cell.content.ast):
            continue  # no reference slots, nothing to clone-check
        shape = ast_shape(cell.content.ast)
        classes.setdefault(shape, []).append(cell.addr)
        targets[cell.addr] = set(
            referenced_addresses(cell.content.ast, cell.addr.sheet))

    out: list[CloneGroup] = []
    for shape in sorted(classes):
        addrs = sorted(classes[shape], key=addr_key)
        if len(addrs) < 2:
            continue
        if shape == TRIVIAL_SHAPE:
            units = [[a] for a in addrs]
        else:
            by_block: dict[int, list[Address]] = {}
            for a in addrs:
                by_block.setdefault(bmap[a].id, []).append(a)
            units = []
            for block_id in sorted(by_block):
                units.extend(_chain_split(targets, by_block[block_id]))
            units.sort(key=lambda u: addr_key(u[0]))

        merged: list[list[Address]] = []
        for unit in units:
            for group in merged:
                if _can_merge(wb, bmap, targets, group, unit):
                    group.extend(unit)
                    group.sort(key=addr_key)
                    break
            else:
                merged.append(list(unit))

        for members in merged:
            if len(members) < 2:
                continue
            slots = _classify_slots(wb, members)
            axis, stride = _axis_and_stride(members)
            out.append(CloneGroup(
                shape=shape,
                members=members,
                slots=slots,
                translation_consistent=not any(
                    s.kind is SlotKind.INCONSISTENT for s in slots),
                axis=axis,
                stride=stride,
            ))

    out.sort(key=lambda g: addr_key(g.members[0]))
    return out


def _can_merge(wb: Workbook, bmap: dict[Address, Block],
               targets: dict[Address, set[Address]],
               group: list[Address], unit: list[Address]) -> bool:
    if {a.sheet for a in group} != {a.sheet for a in unit}:
        return False
    group_blocks = {bmap[a].id for a in group}
    if any(bmap[a].id in group_blocks for a in unit):
        return False
    for a in unit:
        if any(b in targets[a] or a in targets[b] for b in group):
            return False
    combined = sorted(group + unit, key=addr_key)
    return not any(s.kind is SlotKind.INCONSISTENT
                   for s in _classify_slots(wb, combined))


def _axis_and_stride(members: list[Address]) -> tuple[str, tuple[int, int] | None]:
    deltas = {
        (b.column - a.column, b.row - a.row)
        for a, b in zip(members, members[1:])
    }
    if len(deltas) != 1:
        return "mixed", None
    dcol, drow = deltas.pop()
    if drow == 0:
        return "col", (dcol, drow)
    if dcol == 0:
        return "row", (dcol, drow)
    return "diag", (dcol, drow)


def backward_arcs(graph: DependencyGraph) -> list[tuple[Address, Address]]:
    """Arcs whose dependent sits above-or-left of its precedent in
    reading order (same-sheet arcs only)."""
    out = []
    for p, d in sorted(graph.arcs, key=lambda a: (addr_key(a[0]), addr_key(a[1]))):
        if p.sheet != d.sheet:
            continue
        if (d.row, d.column) < (p.row, p.column):
            out.append((p, d))
    return out


def _sheet_profile(wb: Workbook, name: str) -> tuple[set[int], set[int]]:
    sheet = wb.get_sheet(name)
    rows: set[int] = set()
    cols: set[int] = set()
    if sheet:
        for addr in sheet.cells:
            rows.add(addr.row)
            cols.add(addr.column)
    return rows, cols


def _longest_gap(filled: set[int], lo: int, hi: int) -> int:
    run = best = 0
    for x in range(lo + 1, hi):
        if x in filled:
            run = 0
        else:
            run += 1
            best = max(best, run)
    return best


def arc_blank_run(wb: Workbook, precedent: Address, dependent: Address) -> int:
    """Longest band of fully blank rows or columns an arc straddles."""
    if precedent.sheet != dependent.sheet:
        return 0
    rows, cols = _sheet_profile(wb, precedent.sheet or "")
    row_gap = _longest_gap(rows, min(precedent.row, dependent.row),
                           max(precedent.row, dependent.row))
    col_gap = _longest_gap(cols, min(precedent.column, dependent.column),
                           max(precedent.column, dependent.column))
    return max(row_gap, col_gap)


def layout_metrics(wb: Workbook, graph: DependencyGraph, blocks: list[Block],
                   groups: list[CloneGroup]) -> LayoutMetrics:
    same_sheet = [(p, d) for p, d in graph.arcs if p.sheet == d.sheet]
    backward = backward_arcs(graph)
    ratio = len(backward) / len(same_sheet) if same_sheet else 0.0

    max_run = 0
    for p, d in same_sheet:
        max_run = max(max_run, arc_blank_run(wb, p, d))

    bounding_rows = bounding_cols = 0
    for name in wb.sheet_names:
        cols, rows = wb.bounds(name)
        bounding_rows = max(bounding_rows, rows)
        bounding_cols = max(bounding_cols, cols)

    dispersion = 0
    for g in groups:
        for a, b in zip(g.members, g.members[1:]):
            dispersion = max(dispersion,
                             abs(a.column - b.column), abs(a.row - b.row))

    return LayoutMetrics(
        backward_arc_ratio=ratio,
        max_blank_run=max_run,
        bounding_rows=bounding_rows,
        bounding_cols=bounding_cols,
        clone_dispersion=dispersion,
    )


def simulate_insertion(wb: Workbook, blocks: list[Block],
                       groups: list[CloneGroup], target_block: Block,
                       axis: str, position: int) -> InsertionImpact:
    """Insert a full-grid row/column band at `position` next to or inside
    `target_block`. Reports the other blocks the band would split, plus
    clone groups whose slot lists the insertion extends but whose next
    member cannot be produced by translating the last one."""
    if axis not in ("row", "column"):
        raise ValueError(f"axis must be 'row' or 'column', got {axis!r}")
    lo = target_block.min_row if axis == "row" else target_block.min_col
    hi = target_block.max_row if axis == "row" else target_block.max_col
    if not lo <= position <= hi + 1:
        raise ValueError(
            f"position {position} not inside or adjacent to the target block")

    intersected = []
    for b in blocks:
        if b.id == target_block.id or b.sheet != target_block.sheet:
            continue
        span = (b.min_row, b.max_row) if axis == "row" else (b.min_col, b.max_col)
        if span[0] < position <= span[1]:
            intersected.append(b)

    member_addrs = set(target_block.members)
    manual: list[tuple[Address, Address]] = []
    for g in groups:
        if g.stride is None or g.axis not in ("col", "row"):
            continue
        if _insertion_extends_group(g, member_addrs, axis, position):
            new_member = g.members[-1].shifted(*g.stride)
            if _extension_needs_manual_edit(g):
                manual.append((g.members[-1], new_member))

    manual.sort(key=lambda pair: addr_key(pair[0]))
    return InsertionImpact(target_block, axis, position, intersected, manual)


def _slot_progression(slot: CloneSlot) -> tuple[int, int] | None:
    """Constant consecutive offset of the slot's targets, if any."""
    deltas = {
        (b.target.column - a.target.column, b.target.row - a.target.row)
        for a, b in zip(slot.refs, slot.refs[1:])
    }
    if len(deltas) != 1:
        return None
    return deltas.pop()


def _insertion_extends_group(group: CloneGroup, target_members: set[Address],
                             axis: str, position: int) -> bool:
    for slot in group.slots:
        delta = _slot_progression(slot)
        if delta is None or delta == (0, 0):
            continue
        last = slot.refs[-1].target
        if last not in target_members:
            continue
        if axis == "row" and delta[0] == 0 and position == last.row + delta[1]:
            return True
        if axis == "column" and delta[1] == 0 and position == last.column + delta[0]:
            return True
    return False


def _extension_needs_manual_edit(group: CloneGroup) -> bool:
    """True when translating the last member by the member stride does not
    produce the formula the next member needs (each slot must continue its
    own target progression)."""
    stride = group.stride
    assert stride is not None
    for slot in group.slots:
        delta = _slot_progression(slot)
        if delta is None:
            return True
        last = slot.refs[-1]
        required = (last.target.column + delta[0], last.target.row + delta[1])
        translated = (
            last.target.column if last.column_absolute else last.target.column + stride[0],
            last.target.row if last.row_absolute else last.target.row + stride[1],
        )
        if required != translated:
            return True
    return False


def analyze_structure(wb: Workbook, graph: DependencyGraph,
                      cfg: AuditConfig) -> StructureAnalysis:
    blocks = detect_blocks(wb)
    bmap = block_map(blocks)
    labels = {
        cell.addr: _associate(wb, bmap, cell.addr)
        for cell in wb.iter_cells()
        if cell.is_number or cell.is_formula
    }
    groups = clone_groups(wb, blocks)
    return StructureAnalysis(
        blocks=blocks,
        block_of=bmap,
        labels=labels,
        inputs=classify_inputs(wb, graph, blocks, cfg),
        groups=groups,
        metrics=layout_metrics(wb, graph, blocks, groups),
    )
