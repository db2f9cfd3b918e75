"""Acceptance criteria, one test each.

Every test records a single ``PASS``/``FAIL`` line; the lines are printed in
the pytest terminal summary and when this file is run as a script.
"""

import math
import random
import time

import httpx
import pytest

from clockcdt.fixtures import PUBLISHED_ITEM_SCORES
from clockcdt.genlab import CENTER, DefectSpec, random_defect_spec, random_time, render_clock
from clockcdt.genlab import render_reading_stimulus
from clockcdt.geometry import extract_features
from clockcdt.harness import BatteryConfig, Mode, canonical_prompt, read_jsonl, run_battery
from clockcdt.reader import Interpretation, ReadingErrorClass, classify_reading, read_time
from clockcdt.rubric import DEFAULT_WEIGHT_TABLE, RubricConfig, score_document, weight_raw
from clockcdt.scene import parse_drawing

LINES: list[str] = []

# time limits per criterion, seconds
LIMIT_TABLE = 1.0
LIMIT_ORACLE = 10.0
LIMIT_ROUND_TRIP = 5.0
N_ORACLE = 500
N_INVARIANCE = 200
SWAP_TOLERANCE_MIN = 1


def record(number, title, ok, detail):
    LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})")
    assert ok, detail


def test_criterion_1_table_reproduction():
    t0 = time.perf_counter()
    sum_mismatch = [(name, sum(items), total) for name, _, items, total, _ in PUBLISHED_ITEM_SCORES if sum(items) != total]
    weight_mismatch = [(name, total, weighted) for name, _, _, total, weighted in PUBLISHED_ITEM_SCORES
                       if weight_raw(total, DEFAULT_WEIGHT_TABLE) != weighted]
    elapsed = time.perf_counter() - t0
    ok = not sum_mismatch and not weight_mismatch and len(PUBLISHED_ITEM_SCORES) == 12 and elapsed < LIMIT_TABLE
    detail = (f"{12 - len(sum_mismatch)}/12 rows sum to printed Total Raw, "
              f"{12 - len(weight_mismatch)}/12 weights match, {elapsed:.3f}s")
    if sum_mismatch:
        detail += "; item sum vs printed: " + ", ".join(f"{n} {s}!={t}" for n, s, t in sum_mismatch)
    record(1, "published item-score table reproduction", ok, detail)


def test_criterion_2_oracle_equivalence():
    rng = random.Random(20240601)
    cases = [(random_time(rng), random_defect_spec(rng), rng.randrange(1 << 30)) for _ in range(N_ORACLE)]
    t0 = time.perf_counter()
    bad = []
    for i, (t, spec, seed) in enumerate(cases):
        clock = render_clock(t, spec, seed)
        report = score_document(clock.document, RubricConfig(target_time=t))
        if report.items != clock.predicted_items or report.flags != clock.predicted_flags:
            bad.append(i)
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < LIMIT_ORACLE
    record(2, "generator-rubric oracle equivalence", ok,
           f"{N_ORACLE - len(bad)}/{N_ORACLE} exact, {elapsed:.2f}s, first mismatches {bad[:5]}")


def test_criterion_3_reading_round_trip():
    stimuli = {(h, m): render_clock((h, m)).document for h in range(1, 13) for m in range(60)}
    t0 = time.perf_counter()
    bad = []
    for truth, doc in stimuli.items():
        r = read_time(extract_features(parse_drawing(doc)))
        if (r.hour, r.minute) != truth or r.interpretation is not Interpretation.SHORT_IS_HOUR:
            bad.append(truth)
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < LIMIT_ROUND_TRIP
    record(3, "reading round trip", ok, f"{720 - len(bad)}/720 exact, {elapsed:.2f}s")


def test_criterion_4_confusion_reproduction():
    feats = extract_features(parse_drawing(render_reading_stimulus((5, 45))))
    alt = read_time(feats).alternate(Interpretation.SWAPPED)
    diff = abs((alt.hour % 12) * 60 + alt.minute - (9 * 60 + 29))
    expected = {
        (9, 30): ReadingErrorClass.SWAPPED_HANDS,
        (9, 25): ReadingErrorClass.SWAPPED_HANDS,
        (9, 0): ReadingErrorClass.MINUTE_HAND_AS_HOUR,
        (4, 50): ReadingErrorClass.OTHER,
        (5, 45): ReadingErrorClass.CORRECT,
    }
    got = {rep: classify_reading(rep, (5, 45), feats) for rep in expected}
    ok = min(diff, 720 - diff) <= SWAP_TOLERANCE_MIN and got == expected
    record(4, "5:45 confusion reproduction", ok,
           f"swapped alternate {alt.hour}:{alt.minute:02d}, "
           + ", ".join(f"{h}:{m:02d}->{c.value}" for (h, m), c in got.items()))


def _transformed(document, angle, scale, tx, ty):
    inner = document.split(">", 1)[1].rsplit("</svg>", 1)[0]
    cx, cy = CENTER
    return ('<svg xmlns="http://www.w3.org/2000/svg">'
            f'<g transform="translate({tx:.6f} {ty:.6f}) rotate({angle:.6f}) scale({scale:.6f}) '
            f'translate({-cx} {-cy})">{inner}</g></svg>')


def test_criterion_5_invariance():
    rng = random.Random(77)
    bad = 0
    for _ in range(N_INVARIANCE):
        t = random_time(rng)
        cfg = RubricConfig(target_time=t)
        doc = render_clock(t, DefectSpec(), rng.randrange(1 << 30)).document
        scale = math.exp(rng.uniform(math.log(0.1), math.log(10)))
        moved = _transformed(doc, rng.uniform(-180, 180), scale, rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3))
        if score_document(doc, cfg).items != score_document(moved, cfg).items:
            bad += 1
    record(5, "rigid motion and scale invariance", bad == 0,
           f"{N_INVARIANCE - bad}/{N_INVARIANCE} identical ItemScores")


def _stub(request):
    name = request.url.path.strip("/")
    body = {
        "clock": "```svg\n" + render_clock((9, 10)).document + "```",
        "prose": "I am unable to draw, but a clock has a round face.",
        "empty": "",
        "reader": "That clock reads 9:00.",
    }[name]
    return httpx.Response(200, json={"choices": [{"message": {"content": body}}]})


def _stub_battery(tmp_path):
    endpoints = [{"model_id": n, "base_url": f"http://stub/{n}", "backoff": 0}
                 for n in ("clock", "prose", "empty")]
    endpoints.append({"model_id": "reader", "base_url": "http://stub/reader", "mode": "Reading"})
    cfg = BatteryConfig.from_mapping({"endpoints": endpoints, "run_root": str(tmp_path), "parallelism": 4})
    return run_battery(cfg, transport=httpx.MockTransport(_stub))


def test_criterion_6_prompt_fidelity(tmp_path):
    result = _stub_battery(tmp_path)
    transcripts = read_jsonl(result.run_dir / "transcripts.jsonl")
    svg_runs = [t for t in transcripts if t["mode"] == Mode.LANGUAGE_SVG.value]
    canonical = canonical_prompt(Mode.LANGUAGE_SVG).encode("utf-8")
    exact = sum(t["prompt_text"].encode("utf-8") == canonical for t in svg_runs)
    per_model = sorted(t["model_id"] for t in svg_runs)
    ok = exact == len(svg_runs) == 3 and per_model == ["clock", "empty", "prose"]
    record(6, "prompt fidelity", ok, f"{exact}/{len(svg_runs)} LanguageSvg transcripts byte-exact")


def test_criterion_7_degenerate_handling(tmp_path):
    result = _stub_battery(tmp_path)
    by_id = {r.model_id: r.report for r in result.results}
    degenerate = [by_id["prose"], by_id["empty"]]
    ok = (all(r.items.as_tuple() == (0,) * 13 and r.total_raw == 0 and r.weighted_raw == 0
              and r.flags.failure == "NoDrawingFound" for r in degenerate)
          and by_id["clock"].total_raw == 15 and result.exit_code == 0)
    record(7, "degenerate handling", ok,
           "prose-only and empty replies -> " + ", ".join(f"{r.total_raw}/{r.flags.failure}" for r in degenerate))


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
