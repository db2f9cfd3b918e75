"""Item-matrix tables (markdown / CSV) and JSON exports of scored results."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .errors import EmptyResults
from .harness import Provenance, ResultRecord
from .rubric import (
    DEFAULT_WEIGHT_TABLE,
    ITEM_NAMES,
    ItemScores,
    QualFlags,
    norm_bracket,
    weight_raw,
)

GROUPS = ("Multimodal", "Language")
GROUP_TITLES = {
    "Multimodal": "Multimodal Models (Direct Image Generation)",
    "Language": "Language Model (SVG Generated)",
}
COLUMN_LABELS = ("Seq", "Pres", "Loc", "Pres", "Acc", "Clos", "Sym",
                 "Pres", "Conn", "Prop", "Corr", "Pres", "Loc")
CATEGORY_OF = ("Numbers",) * 3 + ("Contour",) * 4 + ("Hands",) * 4 + ("Center",) * 2


@dataclass(frozen=True)
class ResultRow:
    model_id: str
    group: str
    items: ItemScores
    total_raw: int
    weighted_raw: int
    bracket: str
    provenance: Provenance = Provenance.AUTOMATIC
    flags: QualFlags = QualFlags(omitted_numbers=frozenset())

    @classmethod
    def build(cls, model_id: str, group: str, items: ItemScores | Iterable[int],
              provenance: Provenance = Provenance.AUTOMATIC, flags: QualFlags | None = None,
              table: Mapping[int, int] = DEFAULT_WEIGHT_TABLE) -> ResultRow:
        if group not in GROUPS:
            raise ValueError(f"group must be one of {GROUPS}")
        if not isinstance(items, ItemScores):
            items = ItemScores.from_sequence(items)
        total = items.total
        weighted = weight_raw(total, table)
        return cls(model_id, group, items, total, weighted, norm_bracket(weighted),
                   Provenance(provenance), flags or QualFlags(omitted_numbers=frozenset()))

    @classmethod
    def from_record(cls, record: ResultRecord) -> ResultRow:
        r = record.report
        return cls(record.model_id, record.group, r.items, r.total_raw, r.weighted_raw,
                   r.bracket, record.provenance, r.flags)

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_id": self.model_id,
            "group": self.group,
            "items": dict(zip(ITEM_NAMES, self.items.as_tuple())),
            "total_raw": self.total_raw,
            "weighted_raw": self.weighted_raw,
            "bracket": self.bracket,
            "provenance": self.provenance.value,
            "flags": self.flags.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ResultRow:
        return cls(d["model_id"], d["group"], ItemScores(**d["items"]), d["total_raw"],
                   d["weighted_raw"], d["bracket"], Provenance(d["provenance"]),
                   QualFlags.from_dict(d["flags"]))


def _ordered(rows: Iterable[ResultRow]) -> list[ResultRow]:
    rows = list(rows)
    return sorted(rows, key=lambda r: GROUPS.index(r.group) if r.group in GROUPS else len(GROUPS))


def flag_tokens(flags: QualFlags) -> str:
    tokens = []
    if flags.failure:
        tokens.append(f"failure={flags.failure}")
    if flags.omitted_numbers:
        tokens.append("omitted=" + "|".join(map(str, sorted(flags.omitted_numbers))))
    if flags.duplicated_numbers:
        tokens.append("duplicated=" + "|".join(map(str, sorted(flags.duplicated_numbers))))
    if flags.out_of_range_numbers:
        tokens.append("out_of_range=" + "|".join(flags.out_of_range_numbers))
    if flags.intrusion_count:
        tokens.append(f"intrusions={flags.intrusion_count}")
    tokens.append(f"hands={flags.hand_count}")
    return ";".join(tokens)


def emit_table(rows: Iterable[ResultRow], fmt: str = "md") -> str:
    rows = _ordered(rows)
    if not rows:
        raise EmptyResults("no results to tabulate")
    if fmt == "csv":
        return _emit_csv(rows)
    if fmt != "md":
        raise ValueError(f"unknown table format {fmt!r}")
    header = ["Model/Item", *COLUMN_LABELS, "Total Raw", "Weighted Raw"]
    cats = ["", *CATEGORY_OF, "", ""]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
        "| " + " | ".join(cats) + " |",
    ]
    current = None
    for row in rows:
        if row.group != current:
            current = row.group
            title = GROUP_TITLES.get(row.group, row.group)
            lines.append("| **" + title + "** |" + " |" * (len(header) - 1))
        cells = [row.model_id, *map(str, row.items.as_tuple()), str(row.total_raw), str(row.weighted_raw)]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _emit_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "group", *(f"{c}.{l}" for c, l in zip(CATEGORY_OF, COLUMN_LABELS)),
                     "Total Raw", "Weighted Raw", "bracket", "provenance", "flags"])
    for r in rows:
        writer.writerow([r.model_id, r.group, *r.items.as_tuple(), r.total_raw, r.weighted_raw,
                         r.bracket, r.provenance.value, flag_tokens(r.flags)])
    return buf.getvalue()


def emit_json(rows: Iterable[ResultRow]) -> str:
    return json.dumps({"results": [r.to_dict() for r in rows]}, indent=2, sort_keys=True) + "\n"


def parse_json(text: str) -> list[ResultRow]:
    return [ResultRow.from_dict(d) for d in json.loads(text)["results"]]


def fixture_rows() -> list[ResultRow]:
    from .fixtures import PUBLISHED_ITEM_SCORES

    return [ResultRow.build(name, group, items, Provenance.MANUAL) for name, group, items, _, _ in PUBLISHED_ITEM_SCORES]
