"""Workbook model: address codec, document loading, schema errors."""
from __future__ import annotations

import json
import random

import pytest

from sheetaudit import Address, AddressError, DocumentError, load_workbook, parse_address
from sheetaudit.model import NumFmt, Ref, column_letters, column_number

from helpers import fixture_text, load_fixture


def test_parse_address_plain():
    addr, col_abs, row_abs = parse_address("C3")
    assert (addr.column, addr.row) == (3, 3)
    assert (col_abs, row_abs) == (False, False)


def test_parse_address_both_absolute():
    addr, col_abs, row_abs = parse_address("$B$7")
    assert (addr.column, addr.row) == (2, 7)
    assert (col_abs, row_abs) == (True, True)


def test_parse_address_bijective_base26():
    addr, _, _ = parse_address("AA10")
    assert (addr.column, addr.row) == (27, 10)
    assert column_number("Z") == 26
    assert column_letters(27) == "AA"
    assert column_letters(702) == "ZZ"
    assert column_letters(703) == "AAA"


def test_parse_address_sheet_prefix():
    addr, _, _ = parse_address("Data!B2")
    assert addr.sheet == "Data"
    assert addr.render() == "Data!B2"


@pytest.mark.parametrize("bad", ["", "3C", "A0", "$$A1", "A1:B2", "ABCD1", "A-1"])
def test_parse_address_rejects_malformed(bad):
    with pytest.raises(AddressError) as err:
        parse_address(bad)
    assert repr(bad)[1:-1] in str(err.value) or bad in str(err.value)


def test_address_round_trip_randomized():
    rng = random.Random(20117)
    for _ in range(300):
        col = rng.randint(1, 18278)
        row = rng.randint(1, 99999)
        sheet = rng.choice([None, "Sheet1", "Data_2"])
        addr = Address(sheet, col, row)
        parsed, col_abs, row_abs = parse_address(addr.render())
        assert parsed == addr and not col_abs and not row_abs
        ref = Ref(addr, rng.random() < 0.5, rng.random() < 0.5)
        parsed, col_abs, row_abs = parse_address(ref.render())
        assert parsed == addr
        assert (col_abs, row_abs) == (ref.column_absolute, ref.row_absolute)


def test_load_small_document():
    wb = load_fixture("jammed_volume")
    assert wb.cell_count() == 4
    addr, _, _ = parse_address("Sheet1!C3")
    cell = wb.cell(addr)
    assert cell.is_formula
    assert cell.content.source == "=6*2*20"


def test_load_empty_document():
    wb = load_workbook('{"sheets": [{"name": "Sheet1", "cells": []}]}')
    assert wb.cell_count() == 0
    assert load_workbook('{"sheets": []}').cell_count() == 0


def test_duplicate_address_rejected():
    doc = json.loads(fixture_text("jammed_volume"))
    doc["sheets"][0]["cells"].append({"addr": "C3", "number": 1})
    with pytest.raises(DocumentError, match="duplicate address"):
        load_workbook(json.dumps(doc))


def test_cell_count_matches_document_entries():
    for name in ("duplicated_margin", "wall_bid_model", "row_column_mismatch"):
        doc = json.loads(fixture_text(name))
        wb = load_fixture(name)
        assert wb.cell_count() == len(doc["sheets"][0]["cells"])


def test_loading_is_deterministic():
    text = fixture_text("wall_bid_model")
    assert load_workbook(text) == load_workbook(text)


@pytest.mark.parametrize(
    "entry, match",
    [
        ({"addr": "A1"}, "exactly one"),
        ({"addr": "A1", "number": 1, "text": "x"}, "exactly one"),
        ({"addr": "A1", "number": True}, "numeric"),
        ({"addr": "A1", "formula": "A2+1"}, 'start with "="'),
        ({"addr": "A1", "formula": "=)"}, "A1"),
        ({"addr": "A1", "number": 1, "shade": "red"}, "unknown"),
        ({"addr": "A1", "number": 1, "format": {"numfmt": "money"}}, "numfmt"),
        ({"addr": "Other!A1", "number": 1}, "different sheet"),
    ],
)
def test_schema_violations_rejected(entry, match):
    doc = {"sheets": [{"name": "Sheet1", "cells": [entry]}]}
    with pytest.raises(DocumentError, match=match):
        load_workbook(json.dumps(doc))


def test_unparseable_formula_reports_address_and_diagnostic():
    doc = {"sheets": [{"name": "Sheet1",
                       "cells": [{"addr": "B2", "formula": "=1+*2"}]}]}
    with pytest.raises(DocumentError) as err:
        load_workbook(json.dumps(doc))
    assert "B2" in str(err.value) and "offset" in str(err.value)


def test_format_defaults():
    doc = {"sheets": [{"name": "Sheet1", "cells": [
        {"addr": "A1", "number": 1, "format": {"numfmt": "currency"}},
        {"addr": "A2", "number": 1, "format": {"numfmt": "general"}},
        {"addr": "A3", "number": 1, "format": {"numfmt": "fixed", "decimals": 4}},
        {"addr": "A4", "number": 1},
    ]}]}
    wb = load_workbook(json.dumps(doc))
    fmt = {c.addr.row: c.format for c in wb.iter_cells()}
    assert fmt[1].numfmt is NumFmt.CURRENCY and fmt[1].decimals == 2
    assert fmt[2].decimals == 0
    assert fmt[3].decimals == 4
    assert fmt[4].numfmt is NumFmt.GENERAL and not fmt[4].input_marker


def test_multi_sheet_addressing():
    doc = {"sheets": [
        {"name": "Main", "cells": [{"addr": "A1", "formula": "=Data!B2*2"}]},
        {"name": "Data", "cells": [{"addr": "B2", "number": 21}]},
    ]}
    wb = load_workbook(json.dumps(doc))
    assert wb.cell_count() == 2
    assert wb.cell(Address("Data", 2, 2)).is_number
