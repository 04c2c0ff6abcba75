"""Dependency graph and evaluation semantics."""
from __future__ import annotations

import json

import pytest

from sheetaudit import build_graph, evaluate, evaluate_ast, load_workbook, parse_formula
from sheetaudit.engine import ErrorKind, ErrorValue
from sheetaudit.model import Address

from helpers import load_doc, load_fixture


def A(token: str) -> Address:
    from sheetaudit import parse_address
    addr, _, _ = parse_address(token)
    return Address("Sheet1", addr.column, addr.row)


def _wb(cells: list[dict]):
    return load_doc({"sheets": [{"name": "Sheet1", "cells": cells}]})


def test_graph_arcs_for_simple_chain():
    wb = load_fixture("duplicated_margin")
    graph = build_graph(wb)
    assert (A("C13"), A("C14")) in graph.arcs
    assert (A("C13"), A("C15")) in graph.arcs  # range expands
    assert (A("C14"), A("C15")) in graph.arcs


def test_graph_no_arcs_for_pure_literals():
    wb = load_fixture("jammed_volume")
    assert build_graph(wb).arcs == set()


def test_graph_self_arc():
    wb = _wb([{"addr": "A1", "formula": "=A1"}])
    assert build_graph(wb).arcs == {(A("A1"), A("A1"))}


def test_bid_model_reproduces_displayed_values():
    wb = load_fixture("wall_bid_model")
    val = evaluate(wb)
    expected = {
        "E8": 240.0, "H10": 48.0, "H12": 480.0, "H13": 96.0, "H14": 576.0,
        "B23": 720.0, "B26": 1296.0, "B29": 1684.80,
        "E23": 480.0, "E26": 1056.0, "E29": 1372.80,
    }
    for token, want in expected.items():
        assert val[A(token)] == pytest.approx(want, abs=0.005)


def test_bid_model_conservation_identities():
    wb = load_fixture("wall_bid_model")
    val = evaluate(wb)
    for cost, material, labor, bid in (("B26", "B23", "B24", "B29"),
                                       ("E26", "E23", "E24", "E29")):
        assert val[A(cost)] == pytest.approx(val[A(material)] + val[A(labor)],
                                             abs=0.005)
        assert val[A(bid)] == pytest.approx(val[A(cost)] * 1.3, abs=0.005)


def test_margin_columns_reproduce_displayed_values():
    wb = load_fixture("duplicated_margin")
    val = evaluate(wb)
    for token, want in (("C14", 388.80), ("D14", 316.80),
                        ("C15", 1684.80), ("D15", 1372.80)):
        assert val[A(token)] == pytest.approx(want, abs=0.005)


def test_two_cell_cycle_marks_both():
    wb = _wb([{"addr": "A1", "formula": "=B1"}, {"addr": "B1", "formula": "=A1"}])
    val = evaluate(wb)
    assert val[A("A1")] == ErrorValue(ErrorKind.CYCLE)
    assert val[A("B1")] == ErrorValue(ErrorKind.CYCLE)


def test_cells_downstream_of_a_cycle_are_cycle_errors():
    wb = _wb([
        {"addr": "A1", "formula": "=B1"},
        {"addr": "B1", "formula": "=A1"},
        {"addr": "C1", "formula": "=COUNT(A1:B1)"},
        {"addr": "D1", "formula": "=2+2"},
    ])
    val = evaluate(wb)
    assert val[A("C1")] == ErrorValue(ErrorKind.CYCLE)
    assert val[A("D1")] == 4.0  # acyclic region still evaluates


def test_evaluation_is_tie_break_independent():
    wb = load_fixture("wall_bid_model")
    graph = build_graph(wb)
    assert evaluate(wb, graph, tie_break="ascending") == evaluate(
        wb, graph, tie_break="descending")


def test_error_propagates_through_arithmetic():
    wb = _wb([
        {"addr": "A1", "formula": "=1/0"},
        {"addr": "B1", "formula": "=A1+1"},
        {"addr": "C1", "formula": "=SUM(A1:B1)"},
        {"addr": "D1", "formula": "=COUNT(A1:B1)"},
    ])
    val = evaluate(wb)
    assert val[A("A1")] == ErrorValue(ErrorKind.DIV0)
    assert val[A("B1")] == ErrorValue(ErrorKind.DIV0)
    assert val[A("C1")] == ErrorValue(ErrorKind.DIV0)
    assert val[A("D1")] == 0.0  # COUNT counts numbers only


def test_blank_coerces_to_zero_in_arithmetic():
    wb = _wb([{"addr": "B1", "formula": "=A1+5"}])
    assert evaluate(wb)[A("B1")] == 5.0


def test_aggregates_skip_blank_and_text():
    wb = _wb([
        {"addr": "A1", "number": 2},
        {"addr": "A2", "text": "n/a"},
        {"addr": "A4", "number": 4},
        {"addr": "B1", "formula": "=SUM(A1:A4)"},
        {"addr": "B2", "formula": "=AVERAGE(A1:A4)"},
        {"addr": "B3", "formula": "=COUNT(A1:A4)"},
        {"addr": "B4", "formula": "=MIN(A1:A4)"},
        {"addr": "B5", "formula": "=PRODUCT(A1:A4)"},
    ])
    val = evaluate(wb)
    assert val[A("B1")] == 6.0
    assert val[A("B2")] == 3.0
    assert val[A("B3")] == 2.0
    assert val[A("B4")] == 2.0
    assert val[A("B5")] == 8.0


def test_text_operand_in_arithmetic_is_value_error():
    wb = _wb([{"addr": "A1", "text": "six"}, {"addr": "B1", "formula": "=A1*2"}])
    assert evaluate(wb)[A("B1")] == ErrorValue(ErrorKind.VALUE)


def test_unknown_function_is_name_error():
    wb = _wb([{"addr": "A1", "formula": "=NOSUCHFN(1)"}])
    assert evaluate(wb)[A("A1")] == ErrorValue(ErrorKind.NAME)


def test_builtin_scalar_functions():
    wb = _wb([
        {"addr": "A1", "formula": "=ROUND(2.345,2)"},
        {"addr": "A2", "formula": "=ROUND(-2.5,0)"},
        {"addr": "A3", "formula": "=ABS(-3)"},
        {"addr": "A4", "formula": "=PI()"},
        {"addr": "A5", "formula": "=50%"},
        {"addr": "A6", "formula": "=2^10"},
    ])
    val = evaluate(wb)
    assert val[A("A1")] == pytest.approx(2.35)
    assert val[A("A2")] == -3.0  # halves round away from zero
    assert val[A("A3")] == 3.0
    assert val[A("A4")] == pytest.approx(3.14159265, abs=1e-8)
    assert val[A("A5")] == 0.5
    assert val[A("A6")] == 1024.0


def test_evaluate_ast_against_existing_valuation():
    wb = load_fixture("duplicated_margin")
    val = evaluate(wb)
    snapshot = dict(val)
    assert evaluate_ast(parse_formula("=C13*0.3"), val, "Sheet1") == \
        pytest.approx(388.80, abs=0.005)
    assert evaluate_ast(parse_formula("=SUM(C13:C14)"), val, "Sheet1") == \
        pytest.approx(1684.80, abs=0.005)
    assert evaluate_ast(parse_formula("=1/0"), val, "Sheet1") == \
        ErrorValue(ErrorKind.DIV0)
    assert val == snapshot  # no mutation


def test_dangling_reference_evaluates_to_ref_error():
    from sheetaudit import translate_refs
    wb = load_fixture("duplicated_margin")
    val = evaluate(wb)
    moved = translate_refs(parse_formula("=A1*2"), (-1, 0))
    assert evaluate_ast(moved, val, "Sheet1") == ErrorValue(ErrorKind.REF)


def test_cross_sheet_reference():
    wb = load_workbook(json.dumps({"sheets": [
        {"name": "Main", "cells": [{"addr": "A1", "formula": "=Data!B2*2"}]},
        {"name": "Data", "cells": [{"addr": "B2", "number": 21}]},
    ]}))
    assert evaluate(wb)[Address("Main", 1, 1)] == 42.0


def test_identical_workbooks_evaluate_identically():
    first = evaluate(load_fixture("wall_bid_model"))
    second = evaluate(load_fixture("wall_bid_model"))
    assert first == second
