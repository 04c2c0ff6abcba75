"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines alongside the pytest verdicts.
"""
from __future__ import annotations

import json
import random
import time

import pytest

from sheetaudit import (
    clone_groups,
    evaluate,
    parse_address,
    parse_formula,
    print_formula,
    run_all,
    summarize,
    translate_refs,
)
from sheetaudit.cli import main
from sheetaudit.detectors import (
    detect_extendibility,
    detect_formula_integrity,
    detect_input_data_structure,
    detect_semantics,
)
from sheetaudit.engine import build_graph
from sheetaudit.model import Address, addr_key
from sheetaudit.structure import analyze_structure
from sheetaudit.config import AuditConfig

from generators import (
    planted_synthesis_workbook,
    prime_synthesis_workbook,
    random_ast,
    random_clone_workbook,
)
from helpers import FIXTURE_NAMES, fixture_doc, fixture_path, load_fixture


def _report_line(number: int, name: str, ok: bool) -> None:
    print(f"ACCEPTANCE {number} ({name}): {'PASS' if ok else 'FAIL'}")


def _flags(wb) -> dict[str, int]:
    report = summarize(run_all(wb).findings, wb)
    return {rec.type.id: rec.exists for rec in report.records}


def A(token: str, sheet: str = "Sheet1") -> Address:
    addr, _, _ = parse_address(token)
    return Address(sheet, addr.column, addr.row)


FLAG_MATRIX = {
    "jammed_volume": {"1-1": 1, "1-2": 0, "3-1": 0, "3-2": 0, "3-3": 0, "4-1": 0},
    "duplicated_margin": {"1-1": 1, "1-2": 1, "3-2": 0, "3-3": 0},
    "missing_labels": {"2-1a": 1},
    "ambiguous_labels": {"2-1c": 1},
    "wall_bid_model": {"3-1": 1, "1-1": 0, "1-2": 0, "3-2": 0, "4-1": 0},
    "switched_headings": {"3-2": 1},
    "row_column_mismatch": {"3-2": 1, "3-3": 0},
    "spurious": {"4-1": 1},
    "spurious_control": {"4-1": 0},
}


def test_criterion_1_fixture_flag_matrix():
    started = time.perf_counter()
    failures = []
    for name, expected in FLAG_MATRIX.items():
        flags = _flags(load_fixture(name))
        for tid, want in expected.items():
            if flags[tid] != want:
                failures.append(f"{name}:{tid} expected {want} got {flags[tid]}")
    elapsed = time.perf_counter() - started
    ok = not failures and elapsed < 5.0
    _report_line(1, "fixture flag matrix", ok)
    assert not failures, failures
    assert elapsed < 5.0, f"matrix took {elapsed:.2f}s"


def test_criterion_2_numeric_reproduction():
    wb6 = load_fixture("wall_bid_model")
    val6 = evaluate(wb6)
    expected6 = {
        "B29": 1684.80, "E29": 1372.80,  # grand total bids (lava, brick)
        "H14": 576.00,                   # total labor expense
        "E8": 240.0,                     # total cubic volume
        "H10": 48.0,                     # total projected hours
    }
    wb3 = load_fixture("duplicated_margin")
    val3 = evaluate(wb3)
    expected3 = {"C14": 388.80, "D14": 316.80, "C15": 1684.80, "D15": 1372.80}

    ok = all(val6[A(t)] == pytest.approx(v, abs=0.005)
             for t, v in expected6.items())
    ok = ok and all(val3[A(t)] == pytest.approx(v, abs=0.005)
                    for t, v in expected3.items())
    _report_line(2, "numeric reproduction", ok)
    for token, want in expected6.items():
        assert val6[A(token)] == pytest.approx(want, abs=0.005), token
    for token, want in expected3.items():
        assert val3[A(token)] == pytest.approx(want, abs=0.005), token


def _copy_oracle_violated(wb, group) -> bool:
    for i, src in enumerate(group.members):
        for j, dst in enumerate(group.members):
            if i == j:
                continue
            delta = (dst.column - src.column, dst.row - src.row)
            moved = translate_refs(wb.cell(src).content.ast, delta)
            if print_formula(moved) != print_formula(wb.cell(dst).content.ast):
                return True
    return False


def test_criterion_3_copy_paste_oracle():
    workbooks = [load_fixture(name) for name in FIXTURE_NAMES]
    workbooks += [random_clone_workbook(seed) for seed in range(200)]

    counterexamples = []
    clean_groups = flagged_groups = 0
    for index, wb in enumerate(workbooks):
        groups = clone_groups(wb)
        flagged = {frozenset(f.cells)
                   for f in run_all(wb).findings if f.type.id == "3-3"}
        for g in groups:
            if not g.translation_consistent:
                continue
            has_finding = frozenset(g.members) in flagged
            violated = _copy_oracle_violated(wb, g)
            if has_finding != violated:
                counterexamples.append(
                    (index, [a.render() for a in g.members],
                     has_finding, violated))
            if has_finding:
                flagged_groups += 1
            else:
                clean_groups += 1

    ok = not counterexamples and clean_groups > 0 and flagged_groups > 0
    _report_line(3, "copy/paste oracle", ok)
    assert not counterexamples, counterexamples[:5]
    # the random population must exercise both directions of the oracle
    assert clean_groups > 0 and flagged_groups > 0


def test_criterion_4_synthesis_oracle():
    found = 0
    for seed in range(100):
        wb, planted = planted_synthesis_workbook(seed)
        target = A(planted)
        hits = [f for f in run_all(wb).findings
                if f.type.id == "4-2" and target in f.cells]
        if hits:
            found += 1

    false_positives = 0
    for seed in range(100):
        wb = prime_synthesis_workbook(1000 + seed)
        if any(f.type.id == "4-2" for f in run_all(wb).findings):
            false_positives += 1

    ok = found >= 95 and false_positives == 0
    _report_line(4, "synthesis oracle", ok)
    assert found >= 95, f"witness found for only {found}/100 planted cells"
    assert false_positives == 0, f"{false_positives} coincidence-free false positives"


def test_criterion_5_counting_law():
    workbooks = [load_fixture(name) for name in FIXTURE_NAMES]
    workbooks += [random_clone_workbook(seed) for seed in range(50)]
    ok = True
    for wb in workbooks:
        report = summarize(run_all(wb).findings, wb)
        for rec in report.records:
            law = ((rec.exists == 1) == (rec.finding_count >= 1))
            if report.denominator:
                law = law and ((rec.exists == 1) == (rec.cer > 0))
            law = law and 0.0 <= rec.cer <= 1.0
            ok = ok and law
            assert law, (rec.type.id, rec.exists, rec.finding_count, rec.cer)
    _report_line(5, "counting law", ok)


def test_criterion_6_determinism(capsys):
    path = str(fixture_path("wall_bid_model"))
    assert main(["lint", path, "--format", "machine"]) == 1
    first = capsys.readouterr().out
    assert main(["lint", path, "--format", "machine"]) == 1
    second = capsys.readouterr().out

    wb = load_fixture("wall_bid_model")
    cfg = AuditConfig()
    graph = build_graph(wb)
    valuation = evaluate(wb, graph)
    structure = analyze_structure(wb, graph, cfg)
    forward = (detect_input_data_structure(wb, graph, valuation, structure, cfg)
               + detect_semantics(wb, graph, structure, cfg)
               + detect_extendibility(wb, structure, cfg)
               + detect_formula_integrity(wb, graph, valuation, cfg))
    backward = (detect_formula_integrity(wb, graph, valuation, cfg)
                + detect_extendibility(wb, structure, cfg)
                + detect_semantics(wb, graph, structure, cfg)
                + detect_input_data_structure(wb, graph, valuation, structure, cfg))
    key = lambda f: (f.type.id, addr_key(f.cells[0]), f.message)
    as_tuples = lambda fs: [(f.type.id, tuple(f.cells), f.message) for f in fs]
    same_order = as_tuples(sorted(forward, key=key)) == \
        as_tuples(sorted(backward, key=key))

    ok = first == second and same_order
    _report_line(6, "determinism", ok)
    assert first == second
    assert same_order


def test_criterion_7_parser_round_trip():
    formulas: list[str] = []
    for name in FIXTURE_NAMES:
        for sheet in fixture_doc(name)["sheets"]:
            formulas.extend(c["formula"] for c in sheet["cells"] if "formula" in c)
    rng = random.Random(20260811)
    formulas += [print_formula(random_ast(rng, 3)) for _ in range(1000)]

    ok = True
    for text in formulas:
        once = parse_formula(text)
        again = parse_formula(print_formula(once))
        if once != again:
            ok = False
            break
    _report_line(7, "parser round trip", ok)
    assert ok, f"round trip failed for {text!r}"


def test_criterion_8_exit_codes(tmp_path, capsys):
    codes = {}
    codes["clean"] = main(["lint", str(fixture_path("empty"))])
    for name, expected in FLAG_MATRIX.items():
        if any(expected.values()):
            codes[name] = main(["lint", str(fixture_path(name))])
    bad = tmp_path / "broken.wb"
    bad.write_text("{not json")
    codes["malformed"] = main(["lint", str(bad)])
    capsys.readouterr()

    ok = (codes.pop("clean") == 0 and codes.pop("malformed") == 2
          and all(code == 1 for code in codes.values()))
    _report_line(8, "exit-code contract", ok)
    assert ok, codes
