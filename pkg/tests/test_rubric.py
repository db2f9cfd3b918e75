import json

import pytest

from clockcdt.errors import ConfigInvalid, OutOfRange, RangeViolation
from clockcdt.genlab import CENTER, RADIUS, DefectSpec, render_clock
from clockcdt.geometry import extract_features
from clockcdt.rubric import (
    BRACKET_ALIASES,
    DEFAULT_WEIGHT_TABLE,
    ItemScores,
    QualFlags,
    RubricConfig,
    ScoreReport,
    canonical_bracket,
    norm_bracket,
    score_contour,
    score_document,
    score_drawing,
    score_hands,
    score_numbers,
    sequence_score,
    weight_raw,
)
from clockcdt.scene import parse_drawing

from conftest import line_from, polar, svg

CX, CY = CENTER
R = RADIUS
DIAL = f'<circle cx="{CX}" cy="{CY}" r="{R}"/>'
DOT = f'<circle cx="{CX}" cy="{CY}" r="{0.02 * R}"/>'
ANCHOR_FIRST = [12, 3, 6, 9, 1, 2, 4, 5, 7, 8, 10, 11]


def numerals(order, radial=0.8, jitter=0.0):
    out = []
    for i, k in enumerate(order):
        off = jitter if i % 2 else -jitter
        x, y = polar(CX, CY, radial * R, 30 * k + off)
        out.append(f'<text x="{x:.4f}" y="{y:.4f}">{k}</text>')
    return out


def features(*elements):
    return extract_features(parse_drawing(svg(*elements)))


def test_anchor_first_numbers_score_two():
    f = features(DIAL, *numerals(ANCHOR_FIRST, jitter=4.0))
    assert score_numbers(f) == (2, 1, 1)


def test_sequential_numbers_score_one():
    f = features(DIAL, *numerals(range(1, 13)))
    assert score_numbers(f) == (1, 1, 1)


def test_partial_sequential_numbers():
    f = features(DIAL, *numerals([1, 2, 3, 5, 8, 9, 11]))
    assert score_numbers(f) == (1, 0, 1)


@pytest.mark.parametrize("order,expected", [
    ([12, 3, 6, 9, 1, 2, 4, 5, 7, 8, 10, 11], 2),
    (list(range(1, 13)), 1),
    ([12] + list(range(1, 12)), 1),
    ([3, 12, 6, 9, 1, 2, 4, 5, 7, 8, 10, 11], 0),
    ([12, 3, 6, 9, 2, 1, 4, 5, 7, 8, 10, 11], 0),
    ([12, 3, 6, 1, 9, 2, 4, 5, 7, 8, 10, 11], 0),
    ([5, 3, 1], 0),
    ([], 0),
])
def test_sequence_score(order, expected):
    assert sequence_score(order) == expected


def test_misplaced_numbers_lose_location():
    f = features(DIAL, *numerals(range(1, 13), jitter=20.0))
    assert score_numbers(f)[2] == 0
    f = features(DIAL, *numerals(range(1, 13), radial=0.3))
    assert score_numbers(f)[2] == 0


def test_duplicate_and_out_of_range_zero_presence():
    x, y = polar(CX, CY, 0.5 * R, 120)
    f = features(DIAL, *numerals(range(1, 13)), f'<text x="{x}" y="{y}">4</text>')
    assert score_numbers(f)[1] == 0
    f = features(DIAL, *numerals(range(1, 13)), f'<text x="{x}" y="{y}">13</text>')
    assert score_numbers(f)[1] == 0


def test_numbers_without_contour_are_zero():
    f = features(*numerals(range(1, 13)))
    assert score_numbers(f) == (0, 0, 0)


def test_perfect_circle_contour():
    f = features(DIAL, *numerals(ANCHOR_FIRST), line_from(CX, CY, 0.5 * R, 275),
                 line_from(CX, CY, 0.85 * R, 60))
    assert score_contour(f) == (1, 1, 1, 1)


def test_open_contour_fails_closure():
    f = extract_features(parse_drawing(render_clock((9, 10), DefectSpec(open_contour_gap=0.1)).document))
    assert f.contour.closure_gap_fraction > 0.05
    assert score_contour(f)[2] == 0


def test_flattened_ellipse_fails_symmetry():
    f = extract_features(parse_drawing(render_clock((9, 10), DefectSpec(axis_ratio=0.6)).document))
    assert f.contour.axis_ratio == pytest.approx(0.6, abs=1e-6)
    assert score_contour(f)[3] == 0


def test_numbers_outside_contour_fail_accommodation():
    f = features(DIAL, *numerals(range(1, 13), radial=1.2))
    assert score_contour(f)[1] == 0


def test_no_contour_gates_contour_items():
    f = features(*numerals(range(1, 13)))
    assert score_contour(f) == (0, 0, 0, 0)


def test_hands_at_nine_ten():
    f = features(DIAL, line_from(CX, CY, 0.5 * R, 275), line_from(CX, CY, 0.9 * R, 60))
    assert score_hands(f) == (1, 1, 2, 1)


def test_equal_hands_have_no_proportion_or_correctness():
    f = features(DIAL, line_from(CX, CY, 0.8 * R, 275), line_from(CX, CY, 0.8 * R, 60))
    assert score_hands(f) == (1, 1, 0, 0)


def test_marginal_proportion():
    f = features(DIAL, line_from(CX, CY, 0.72 * R, 275), line_from(CX, CY, 0.8 * R, 60))
    assert score_hands(f) == (1, 1, 1, 1)


def test_hands_at_wrong_time():
    f = features(DIAL, line_from(CX, CY, 0.5 * R, 270), line_from(CX, CY, 0.9 * R, 120))
    assert score_hands(f)[3] == 0


def test_target_time_is_configurable():
    f = features(DIAL, line_from(CX, CY, 0.5 * R, 330), line_from(CX, CY, 0.9 * R, 60))
    assert score_hands(f)[3] == 0
    assert score_hands(f, RubricConfig(target_time=(11, 10)))[3] == 1


def test_three_hands_gate_presence_and_correctness():
    f = features(DIAL, line_from(CX, CY, 0.5 * R, 275), line_from(CX, CY, 0.9 * R, 60),
                 line_from(CX, CY, 0.7 * R, 180))
    pres, _, _, corr = score_hands(f)
    assert pres == 0 and corr == 0


def test_center_scores():
    from clockcdt.rubric import score_center

    assert score_center(features(DIAL, DOT)) == (1, 1)
    clock = render_clock((9, 10), DefectSpec(offset_center=0.3), seed=3)
    assert score_center(extract_features(parse_drawing(clock.document))) == (1, 0)
    a = polar(CX, CY, 0.1 * R, 270)
    b = polar(CX, CY, 0.1 * R, 90)
    f = features(DIAL, line_from(CX, CY, 0.5 * R, 0, start=a), line_from(CX, CY, 0.8 * R, 180, start=b))
    assert score_center(f) == (0, 0)


def test_nano_like_scene_scores_zero():
    report = score_drawing(parse_drawing(svg('<text x="10" y="20">I cannot draw that.</text>')))
    assert report.items.as_tuple() == (0,) * 13
    assert report.total_raw == 0 and report.weighted_raw == 0
    assert report.bracket == "Very Low"
    assert report.flags.intrusion_count >= 1


def test_default_clock_scores_fifteen():
    report = score_document(render_clock((9, 10)).document)
    assert report.total_raw == 15
    assert report.weighted_raw == 4
    assert report.bracket == "Average"
    assert report.flags.omitted_numbers == frozenset()
    assert report.flags.hand_count == 2


def test_item_vector_from_table():
    items = ItemScores.from_sequence([2, 0, 1, 1, 1, 1, 1, 1, 1, 2, 1, 1, 1])
    assert items.total == 14
    assert weight_raw(items.total) == 4


@pytest.mark.parametrize("raw,weighted", [(14, 4), (9, 2), (10, 3), (0, 0), (4, 0), (5, 1), (8, 1),
                                          (11, 3), (12, 4), (15, 4)])
def test_weight_raw(raw, weighted):
    assert weight_raw(raw) == weighted


@pytest.mark.parametrize("raw", [-1, 16])
def test_weight_raw_out_of_range(raw):
    with pytest.raises(OutOfRange):
        weight_raw(raw)


@pytest.mark.parametrize("w,label", [(0, "Very Low"), (1, "Low"), (2, "Borderline"),
                                     (3, "Low Average"), (4, "Average")])
def test_norm_bracket(w, label):
    assert norm_bracket(w) == label


def test_norm_bracket_out_of_range_and_aliases():
    with pytest.raises(OutOfRange):
        norm_bracket(5)
    assert canonical_bracket("Very Poor") == "Very Low"
    assert canonical_bracket("Normal") == "Average"
    assert set(BRACKET_ALIASES.values()) <= {"Very Low", "Average"}


def test_item_ranges_enforced():
    with pytest.raises(RangeViolation):
        ItemScores(numbers_pres=2)
    with pytest.raises(RangeViolation):
        ItemScores(hands_prop=3)
    with pytest.raises(RangeViolation):
        ItemScores.from_sequence([0] * 12)


def test_weight_table_must_be_monotone():
    bad = dict(DEFAULT_WEIGHT_TABLE)
    bad[10] = 1
    with pytest.raises(ConfigInvalid):
        RubricConfig(weight_table=bad)
    with pytest.raises(ConfigInvalid):
        RubricConfig(prop_clear_ratio=0.96)
    with pytest.raises(ConfigInvalid):
        RubricConfig.from_mapping({"no_such_key": 1})


def test_config_loads_from_yaml(tmp_path):
    path = tmp_path / "rubric.yaml"
    path.write_text("target_time: '11:10'\nangle_tolerance: 10\ngeometry:\n  hand_anchor_radius: 0.2\n")
    cfg = RubricConfig.load(path)
    assert cfg.target_time == (11, 10)
    assert cfg.angle_tolerance == 10
    assert cfg.geometry.hand_anchor_radius == 0.2
    assert RubricConfig.from_mapping(cfg.to_mapping()) == cfg


def test_report_json_round_trip():
    report = score_document(render_clock((3, 40), DefectSpec(omit_numbers=frozenset({2}))).document)
    data = json.loads(report.to_json())
    assert set(data) == {"items", "total_raw", "weighted_raw", "bracket", "flags", "rationales"}
    assert ScoreReport.from_dict(data) == report
    assert set(data["rationales"]) >= set(data["items"])


def test_report_invariants_and_gating():
    for spec in [DefectSpec(), DefectSpec(equal_hands=True), DefectSpec(axis_ratio=0.5)]:
        r = score_document(render_clock((7, 25), spec).document)
        assert r.total_raw == sum(r.items.as_tuple())
        assert r.weighted_raw == weight_raw(r.total_raw)
        assert r.bracket == norm_bracket(r.weighted_raw)
        present = {n for n in range(1, 13)} - r.flags.omitted_numbers
        assert r.flags.omitted_numbers | present == set(range(1, 13))


def test_malformed_document_yields_flagged_zero_report():
    r = score_document("<svg")
    assert r.total_raw == 0
    assert r.flags.failure == "MalformedDocument"
    r = score_document(svg())
    assert r.flags.failure == "EmptyDrawing"


def test_intrusions_count_foreign_marks_and_extra_shapes():
    clock = render_clock((9, 10), DefectSpec(add_intrusion="shape:rect"))
    r = score_document(clock.document.replace("</svg>", '<image href="hand.png"/></svg>'))
    assert r.flags.intrusion_count == 2


def test_qual_flags_dict_round_trip():
    flags = QualFlags(frozenset({1, 2}), frozenset({3}), ("13",), 2, 2, None)
    assert QualFlags.from_dict(json.loads(json.dumps(flags.to_dict()))) == flags
