import json
import random

import pytest

from clockcdt.errors import InvalidDefect
from clockcdt.genlab import (
    CENTER,
    DefectSpec,
    random_defect_spec,
    random_time,
    render_clock,
    render_reading_stimulus,
)
from clockcdt.geometry import extract_features
from clockcdt.rubric import ITEM_NAMES, score_document
from clockcdt.scene import parse_drawing


def hand_bearings(doc):
    f = extract_features(parse_drawing(doc))
    short, long_ = sorted(f.hands, key=lambda h: h.length)
    return short.tip_bearing, long_.tip_bearing


def test_default_prediction_is_maximal():
    clock = render_clock((9, 10))
    assert clock.predicted_items.total == 15
    assert clock.truth_time == (9, 10)


def test_omission_prediction():
    omit = frozenset({1, 2, 4, 5, 7})
    clock = render_clock((9, 10), DefectSpec(omit_numbers=omit))
    assert clock.predicted_items.numbers_pres == 0
    assert clock.predicted_flags.omitted_numbers == omit
    assert score_document(clock.document).flags.omitted_numbers == omit


def test_five_forty_five_hand_bearings():
    s, l = hand_bearings(render_clock((5, 45)).document)
    assert s == pytest.approx(172.5, abs=1e-6)
    assert l == pytest.approx(270, abs=1e-6)


def test_six_thirty_stimulus():
    s, l = hand_bearings(render_reading_stimulus((6, 30)))
    assert s == pytest.approx(195, abs=1e-6)
    assert l == pytest.approx(180, abs=1e-6)


def test_stimulus_has_no_caption():
    scene = parse_drawing(render_reading_stimulus((5, 45)))
    assert all((p.text or "").strip().isdigit() for p in scene.texts)


def test_determinism():
    spec = DefectSpec(shuffle_order=True, offset_center=0.2, add_intrusion="shape:circle")
    a = render_clock((3, 17), spec, seed=11)
    b = render_clock((3, 17), spec, seed=11)
    assert a.document == b.document
    assert a.sidecar_json() == b.sidecar_json()
    assert render_clock((3, 17), spec, seed=12).document != a.document


SINGLE_DEFECTS = {
    "omit_numbers": (DefectSpec(omit_numbers=frozenset({4})), {"numbers_pres", "numbers_seq"}),
    # the extra numeral also breaks the strictly ascending emission order
    "duplicate_number": (DefectSpec(duplicate_number=5), {"numbers_pres", "numbers_seq"}),
    "no_anchor_first": (DefectSpec(no_anchor_first=True), {"numbers_seq"}),
    "open_contour_gap": (DefectSpec(open_contour_gap=0.2), {"contour_clos"}),
    "axis_ratio": (DefectSpec(axis_ratio=0.6), {"contour_sym"}),
    "equal_hands": (DefectSpec(equal_hands=True), {"hands_prop", "hands_corr"}),
    "swap_hand_lengths": (DefectSpec(swap_hand_lengths=True), {"hands_corr"}),
    "wrong_time": (DefectSpec(wrong_time=(4, 40)), {"hands_corr"}),
    # hands move with the hub, so tip bearings seen from the dial center shift too
    "offset_center": (DefectSpec(offset_center=0.3), {"center_loc", "hands_corr"}),
    "add_intrusion": (DefectSpec(add_intrusion="banana"), set()),
    "displace_numbers": (DefectSpec(displace_numbers=40), {"numbers_loc"}),
}


@pytest.mark.parametrize("name", sorted(SINGLE_DEFECTS))
def test_defect_isolation(name):
    spec, targets = SINGLE_DEFECTS[name]
    base = dict(zip(ITEM_NAMES, render_clock((9, 10)).predicted_items.as_tuple()))
    clock = render_clock((9, 10), spec, seed=5)
    got = dict(zip(ITEM_NAMES, clock.predicted_items.as_tuple()))
    changed = {k for k in ITEM_NAMES if got[k] != base[k]}
    assert changed <= targets
    if targets:
        assert changed, f"{name} should change {targets}"
    assert score_document(clock.document).items == clock.predicted_items


def test_wrong_time_sets_truth():
    clock = render_clock((9, 10), DefectSpec(wrong_time=(4, 40)))
    assert clock.truth_time == (4, 40)
    assert clock.target_time == (9, 10)


@pytest.mark.parametrize("kwargs", [
    {"omit_numbers": {0}},
    {"omit_numbers": {13}},
    {"duplicate_number": 3, "omit_numbers": {3}},
    {"open_contour_gap": 0.6},
    {"axis_ratio": 0.3},
    {"offset_center": 0.5},
    {"displace_numbers": 120},
    {"equal_hands": True, "swap_hand_lengths": True},
    {"add_intrusion": "7"},
    {"add_intrusion": "shape:hexagon"},
    {"wrong_time": (13, 0)},
])
def test_invalid_defects(kwargs):
    with pytest.raises(InvalidDefect):
        DefectSpec(**kwargs)


def test_invalid_time():
    with pytest.raises(InvalidDefect):
        render_clock((0, 10))


def test_from_pairs():
    spec = DefectSpec.from_pairs(["omit_numbers=1,2", "shuffle_order", "wrong_time=4:05",
                                  "axis_ratio=0.7", "add_intrusion=hello"])
    assert spec == DefectSpec(omit_numbers=frozenset({1, 2}), shuffle_order=True,
                              wrong_time=(4, 5), axis_ratio=0.7, add_intrusion="hello")
    with pytest.raises(InvalidDefect):
        DefectSpec.from_pairs(["colour=red"])


def test_sidecar_contents():
    clock = render_clock((9, 10), DefectSpec(duplicate_number=2), seed=4)
    data = json.loads(clock.sidecar_json())
    assert data["predicted_items"]["numbers_pres"] == 0
    assert data["predicted_flags"]["duplicated_numbers"] == [2]
    assert data["truth_time"] == "9:10"
    assert data["defects"]["duplicate_number"] == 2


def test_random_specs_are_valid_and_varied():
    rng = random.Random(0)
    specs = [random_defect_spec(rng) for _ in range(50)]
    assert len({json.dumps(s.to_dict(), sort_keys=True) for s in specs}) > 40
    times = {random_time(rng) for _ in range(50)}
    assert all(1 <= h <= 12 and 0 <= m < 60 for h, m in times)


def test_center_offset_moves_hub():
    clock = render_clock((9, 10), DefectSpec(offset_center=0.3), seed=2)
    f = extract_features(parse_drawing(clock.document))
    dx = f.center_candidate.point[0] - CENTER[0]
    dy = f.center_candidate.point[1] - CENTER[1]
    assert (dx * dx + dy * dy) ** 0.5 == pytest.approx(0.3 * 80, rel=1e-3)
