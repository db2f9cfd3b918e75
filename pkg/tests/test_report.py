import csv
import io
import json

import pytest

from clockcdt.errors import EmptyResults
from clockcdt.fixtures import PUBLISHED_ITEM_SCORES
from clockcdt.harness import Provenance, ingest_manual_scores
from clockcdt.report import (
    COLUMN_LABELS,
    ResultRow,
    emit_json,
    emit_table,
    fixture_rows,
    parse_json,
)
from clockcdt.rubric import QualFlags

HEADER = "Seq Pres Loc Pres Acc Clos Sym Pres Conn Prop Corr Pres Loc".split()


def md_rows(text):
    # model rows only: skip header, rule, category and group banner lines
    lines = [l for l in text.splitlines()[3:] if not l.startswith("| **")]
    return [[c.strip() for c in l.strip("|").split("|")] for l in lines]


def test_column_order_frozen():
    assert list(COLUMN_LABELS) == HEADER
    header = emit_table(fixture_rows()).splitlines()[0]
    cells = [c.strip() for c in header.strip("|").split("|")]
    assert cells == ["Model/Item", *HEADER, "Total Raw", "Weighted Raw"]


def test_fixture_total_column_matches_printed_totals():
    rows = md_rows(emit_table(fixture_rows()))
    assert [r[0] for r in rows] == [name for name, *_ in PUBLISHED_ITEM_SCORES]
    assert [int(r[-2]) for r in rows] == [10, 11, 9, 13, 0, 10, 14, 11, 12, 14, 9, 10]


def test_groups_are_ordered_multimodal_first():
    rows = fixture_rows()
    text = emit_table(list(reversed(rows)))
    multi = text.index("Multimodal Models (Direct Image Generation)")
    lang = text.index("Language Model (SVG Generated)")
    assert multi < lang
    assert text.index("GPT-4o |") < lang


def test_single_row_table():
    row = ResultRow.build("Claude", "Language", [2, 0, 0, 1, 1, 1, 1, 0, 1, 1, 0, 1, 1])
    text = emit_table([row])
    assert text.splitlines()[0].count("|") == 17
    (cells,) = md_rows(text)
    assert cells[0] == "Claude" and cells[-2:] == ["10", "3"]


def test_zero_rows():
    with pytest.raises(EmptyResults):
        emit_table([])
    with pytest.raises(EmptyResults):
        emit_table([], fmt="csv")


def test_csv_table():
    flags = QualFlags(frozenset({1, 2}), frozenset({5}), ("13",), 2, 2, None)
    row = ResultRow.build("m", "Language", [1] * 11 + [0, 0], flags=flags)
    rows = list(csv.reader(io.StringIO(emit_table([row], fmt="csv"))))
    assert [h.split(".")[-1] for h in rows[0][2:15]] == HEADER
    assert rows[0][15:17] == ["Total Raw", "Weighted Raw"]
    assert rows[1][15:17] == ["11", "3"]
    assert rows[1][-1] == "omitted=1|2;duplicated=5;out_of_range=13;intrusions=2;hands=2"


def test_json_empty():
    assert json.loads(emit_json([])) == {"results": []}


def test_json_round_trip_and_stability():
    rows = fixture_rows()
    text = emit_json(rows)
    assert parse_json(text) == rows
    assert emit_json(parse_json(text)) == text
    (one,) = parse_json(emit_json(rows[:1]))
    assert one == rows[0]


def test_row_from_record():
    rec = ingest_manual_scores("GPT-4o", [2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 1, 1])
    row = ResultRow.from_record(rec)
    assert row.provenance is Provenance.MANUAL
    assert (row.total_raw, row.weighted_raw, row.bracket) == (13, 4, "Average")
    assert parse_json(emit_json([row])) == [row]


def test_rows_follow_rubric_invariants():
    for row in fixture_rows():
        assert row.total_raw == row.items.total
    with pytest.raises(ValueError):
        ResultRow.build("m", "Raster", [0] * 13)
