"""Synthetic clock drawings with controlled defects and ground-truth item scores.

The predicted scores are derived analytically from the geometry the
generator lays down; they deliberately do not call into the rubric, so the
pair (document, predicted scores) can serve as an independent oracle for the
parse/extract/score pipeline.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

from .errors import InvalidDefect
from .geometry import parse_numeral
from .rubric import ITEM_NAMES, ItemScores, QualFlags, RubricConfig

RADIUS = 80.0
CENTER = (120.0, 120.0)
CANVAS = 240
HOUR_LENGTH = 0.50
MINUTE_LENGTH = 0.85
NUMBER_RADIUS = 0.80
DUPLICATE_RADIUS = 0.65
DOT_RADIUS = 0.02

ANCHOR_FIRST = (12, 3, 6, 9, 1, 2, 4, 5, 7, 8, 10, 11)
SEQUENTIAL = tuple(range(1, 13))
SHAPE_INTRUSIONS = ("shape:circle", "shape:rect")


@dataclass(frozen=True)
class DefectSpec:
    omit_numbers: frozenset[int] = frozenset()
    duplicate_number: int | None = None
    shuffle_order: bool = False
    no_anchor_first: bool = False
    open_contour_gap: float = 0.0
    axis_ratio: float = 1.0
    equal_hands: bool = False
    swap_hand_lengths: bool = False
    wrong_time: tuple[int, int] | None = None
    offset_center: float = 0.0
    add_intrusion: str | None = None
    displace_numbers: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "omit_numbers", frozenset(self.omit_numbers))
        if not self.omit_numbers <= set(range(1, 13)):
            raise InvalidDefect(f"omit_numbers must be within 1..12: {sorted(self.omit_numbers)}")
        if self.duplicate_number is not None:
            if not 1 <= self.duplicate_number <= 12:
                raise InvalidDefect("duplicate_number must be in 1..12")
            if self.duplicate_number in self.omit_numbers:
                raise InvalidDefect("cannot duplicate an omitted number")
        if not 0.0 <= self.open_contour_gap < 0.5:
            raise InvalidDefect("open_contour_gap must be in [0, 0.5)")
        if not 0.5 <= self.axis_ratio <= 1.0:
            raise InvalidDefect("axis_ratio must be in [0.5, 1]")
        if not 0.0 <= self.offset_center <= 0.35:
            raise InvalidDefect("offset_center must be in [0, 0.35]")
        if not -90.0 <= self.displace_numbers <= 90.0:
            raise InvalidDefect("displace_numbers must be in [-90, 90]")
        if self.equal_hands and self.swap_hand_lengths:
            raise InvalidDefect("equal_hands and swap_hand_lengths are exclusive")
        if self.wrong_time is not None:
            _check_time(self.wrong_time)
        if self.add_intrusion is not None:
            s = self.add_intrusion
            if s.startswith("shape:") and s not in SHAPE_INTRUSIONS:
                raise InvalidDefect(f"unknown intrusion shape {s!r}")
            if not s.startswith("shape:") and (not s.strip() or parse_numeral(s) is not None):
                raise InvalidDefect("text intrusion must be non-empty and not a dial numeral")

    def to_dict(self) -> dict[str, Any]:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "omit_numbers":
                v = sorted(v)
            elif f.name == "wrong_time" and v is not None:
                v = "%d:%02d" % v
            d[f.name] = v
        return d

    @classmethod
    def from_pairs(cls, pairs: list[str]) -> DefectSpec:
        """Build from ``key=value`` strings as accepted on the command line."""
        kw: dict[str, Any] = {}
        names = {f.name for f in fields(cls)}
        for pair in pairs:
            key, sep, raw = pair.partition("=")
            key = key.strip()
            if key not in names:
                raise InvalidDefect(f"unknown defect {key!r}")
            raw = raw.strip()
            if key == "omit_numbers":
                kw[key] = frozenset(int(v) for v in raw.replace(";", ",").split(",") if v.strip())
            elif key == "duplicate_number":
                kw[key] = int(raw)
            elif key in ("shuffle_order", "no_anchor_first", "equal_hands", "swap_hand_lengths"):
                kw[key] = (not sep) or raw.lower() in ("1", "true", "yes", "on")
            elif key == "wrong_time":
                h, m = raw.split(":")
                kw[key] = (int(h), int(m))
            elif key == "add_intrusion":
                kw[key] = raw
            else:
                kw[key] = float(raw)
        return cls(**kw)


def _check_time(t: tuple[int, int]) -> None:
    h, m = t
    if not (1 <= h <= 12 and 0 <= m <= 59):
        raise InvalidDefect(f"invalid clock time {t!r}")


@dataclass(frozen=True)
class GeneratedClock:
    document: str
    predicted_items: ItemScores
    predicted_flags: QualFlags
    truth_time: tuple[int, int]
    target_time: tuple[int, int] = (9, 10)
    defects: DefectSpec = field(default_factory=DefectSpec)
    seed: int = 0

    def sidecar(self) -> dict[str, Any]:
        return {
            "target_time": "%d:%02d" % self.target_time,
            "truth_time": "%d:%02d" % self.truth_time,
            "seed": self.seed,
            "defects": self.defects.to_dict(),
            "predicted_items": dict(zip(ITEM_NAMES, self.predicted_items.as_tuple())),
            "predicted_total_raw": self.predicted_items.total,
            "predicted_flags": self.predicted_flags.to_dict(),
        }

    def sidecar_json(self) -> str:
        return json.dumps(self.sidecar(), indent=2, sort_keys=True)


# ---------------------------------------------------------------- geometry helpers


def _unit(bearing_deg: float) -> tuple[float, float]:
    t = math.radians(bearing_deg)
    return math.sin(t), -math.cos(t)


def _polar_radius(a: float, b: float, bearing_deg: float) -> float:
    ux, uy = _unit(bearing_deg)
    return 1.0 / math.hypot(ux / a, uy / b)


def _bearing(origin, p) -> float:
    return math.degrees(math.atan2(p[0] - origin[0], -(p[1] - origin[1]))) % 360.0


def _angle_gap(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def _fmt(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _ramanujan(a: float, b: float) -> float:
    h = ((a - b) / (a + b)) ** 2
    return math.pi * (a + b) * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))


# ---------------------------------------------------------------- oracle rules


def _seq_points(order: list[int]) -> int:
    if not order:
        return 0
    pos = [0 if v == 12 else v for v in order]
    anchors = {12, 3, 6, 9}
    flagged = [v in anchors for v in order]
    a_pos = [p for p, f in zip(pos, flagged) if f]
    n_pos = [p for p, f in zip(pos, flagged) if not f]
    anchors_lead = flagged == sorted(flagged, reverse=True)
    if (sorted(v for v in order if v in anchors) == [3, 6, 9, 12] and anchors_lead
            and a_pos == sorted(set(a_pos)) and n_pos == sorted(set(n_pos))):
        return 2
    if pos == sorted(set(pos)) or order == sorted(set(order)):
        return 1
    return 0


def render_clock(
    time: tuple[int, int],
    defects: DefectSpec = DefectSpec(),
    seed: int = 0,
    cfg: RubricConfig | None = None,
) -> GeneratedClock:
    """Draw a clock meant to show ``time`` and predict how it should score.

    Scores are predicted against a rubric whose target time is ``time``;
    ``defects.wrong_time`` draws the hands at a different time, which then
    becomes the ground-truth reading.  ``cfg`` supplies the threshold values
    the prediction is made against (defaults otherwise).
    """
    _check_time(time)
    cfg = cfg or RubricConfig(target_time=tuple(time))
    rng = random.Random(seed)
    cx, cy = CENTER
    a = RADIUS
    b = RADIUS * defects.axis_ratio
    mean_r = (a + b) / 2
    parts: list[str] = []

    # contour
    gap = defects.open_contour_gap
    gap_fraction = 0.0
    gap_center = rng.uniform(0, 2 * math.pi)
    if gap > 0:
        t0 = gap_center + math.pi * gap
        t1 = gap_center + 2 * math.pi - math.pi * gap
        p0 = (cx + a * math.cos(t0), cy + b * math.sin(t0))
        p1 = (cx + a * math.cos(t1), cy + b * math.sin(t1))
        parts.append(
            f'<path d="M {_fmt(p0[0])} {_fmt(p0[1])} A {_fmt(a)} {_fmt(b)} 0 1 1 '
            f'{_fmt(p1[0])} {_fmt(p1[1])}" fill="none" stroke="black" stroke-width="2"/>'
        )
        gap_fraction = math.hypot(p1[0] - p0[0], p1[1] - p0[1]) / _ramanujan(a, b)
    elif defects.axis_ratio < 1:
        parts.append(f'<ellipse cx="{_fmt(cx)}" cy="{_fmt(cy)}" rx="{_fmt(a)}" ry="{_fmt(b)}" '
                     'fill="none" stroke="black" stroke-width="2"/>')
    else:
        parts.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(a)}" '
                     'fill="none" stroke="black" stroke-width="2"/>')

    # numerals
    order = list(SEQUENTIAL if defects.no_anchor_first else ANCHOR_FIRST)
    if defects.shuffle_order:
        rng.shuffle(order)
    order = [v for v in order if v not in defects.omit_numbers]
    marks: list[tuple[int, float, float]] = []  # value, drawn bearing, radial fraction
    for v in order:
        marks.append((v, 30.0 * v + _displacement(v, defects.displace_numbers), NUMBER_RADIUS))
    if defects.duplicate_number is not None:
        v = defects.duplicate_number
        marks.append((v, 30.0 * v + _displacement(v, defects.displace_numbers), DUPLICATE_RADIUS))
    for v, brg, frac in marks:
        ux, uy = _unit(brg)
        rr = frac * _polar_radius(a, b, brg)
        parts.append(f'<text x="{_fmt(cx + rr * ux)}" y="{_fmt(cy + rr * uy)}" font-size="14" '
                     f'text-anchor="middle" dominant-baseline="middle">{v}</text>')

    # hands
    shown = defects.wrong_time or tuple(time)
    sh, sm = shown
    hour_brg = (30.0 * (sh + sm / 60.0)) % 360.0
    minute_brg = (6.0 * sm) % 360.0
    f = defects.offset_center
    offset_dir = rng.uniform(0, 2 * math.pi)
    hub = (cx + f * b * math.cos(offset_dir), cy + f * b * math.sin(offset_dir)) if f > 0 else (cx, cy)
    hour_len = HOUR_LENGTH * (1 - f) * b
    minute_len = MINUTE_LENGTH * (1 - f) * b
    if defects.equal_hands:
        hour_len = minute_len
    elif defects.swap_hand_lengths:
        hour_len, minute_len = minute_len, hour_len
    tips = []
    for brg, length, width in ((hour_brg, hour_len, 4), (minute_brg, minute_len, 2)):
        ux, uy = _unit(brg)
        tip = (hub[0] + length * ux, hub[1] + length * uy)
        tips.append(tip)
        parts.append(f'<line x1="{_fmt(hub[0])}" y1="{_fmt(hub[1])}" x2="{_fmt(tip[0])}" '
                     f'y2="{_fmt(tip[1])}" stroke="black" stroke-width="{width}"/>')
    parts.append(f'<circle cx="{_fmt(hub[0])}" cy="{_fmt(hub[1])}" r="{_fmt(DOT_RADIUS * b)}" fill="black"/>')

    # intrusion outside the dial
    intrusion = defects.add_intrusion
    if intrusion == "shape:circle":
        parts.append(f'<circle cx="{_fmt(cx - 1.1 * a)}" cy="{_fmt(cy + 1.1 * a)}" '
                     f'r="{_fmt(0.06 * RADIUS)}" fill="none" stroke="black"/>')
    elif intrusion == "shape:rect":
        s = 0.12 * RADIUS
        parts.append(f'<rect x="{_fmt(cx - 1.1 * a - s / 2)}" y="{_fmt(cy + 1.1 * a - s / 2)}" '
                     f'width="{_fmt(s)}" height="{_fmt(s)}" fill="none" stroke="black"/>')
    elif intrusion is not None:
        parts.append(f'<text x="{_fmt(cx + 1.1 * a)}" y="{_fmt(cy - 1.1 * a)}" font-size="10">'
                     f'{_xml_escape(intrusion)}</text>')

    document = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="0 0 {CANVAS} {CANVAS}">\n  ' + "\n  ".join(parts) + "\n</svg>\n"
    )

    # ---- predictions
    values = [v for v, _, _ in marks]
    text_numeral_out = intrusion is not None and not intrusion.startswith("shape:") \
        and intrusion.strip().isdigit()
    seq = _seq_points(values)
    pres = int(sorted(values) == list(SEQUENTIAL) and not text_numeral_out)
    rotation = _rotation_estimate(marks, cfg.geometry.min_numbers_for_rotation)
    lo, hi = cfg.loc_radial_band
    loc = int(bool(marks) and all(
        _angle_gap(brg - rotation, 30.0 * v) <= cfg.angle_tolerance and lo <= frac <= hi
        for v, brg, frac in marks
    ))

    def tip_fraction(tip) -> float:
        d = math.hypot(tip[0] - cx, tip[1] - cy)
        return d / _polar_radius(a, b, _bearing(CENTER, tip)) if d > 0 else 0.0

    acc = int(all(frac <= cfg.accommodation_margin for _, _, frac in marks)
              and all(tip_fraction(t) <= cfg.accommodation_margin for t in tips))
    clos = int(gap_fraction <= cfg.closure_tolerance)
    sym = int(defects.axis_ratio >= cfg.symmetry_min_axis_ratio)

    short_len, long_len = sorted((hour_len, minute_len))
    ratio = short_len / long_len
    prop = 2 if ratio <= cfg.prop_clear_ratio else 1 if ratio <= cfg.prop_marginal_ratio else 0
    corr = 0
    if prop >= 1:
        short_tip, long_tip = (tips[0], tips[1]) if hour_len < minute_len else (tips[1], tips[0])
        th, tm = cfg.target_time
        corr = int(
            _angle_gap(_bearing(CENTER, short_tip) - rotation, 30.0 * (th + tm / 60.0)) <= cfg.angle_tolerance
            and _angle_gap(_bearing(CENTER, long_tip) - rotation, 6.0 * tm) <= cfg.angle_tolerance
        )
    center_loc = int(f * b <= cfg.center_loc_tolerance * mean_r)

    items = ItemScores(seq, pres, loc, 1, acc, clos, sym, 1, 1, prop, corr, 1, center_loc)
    intrusions = 0
    if intrusion is not None:
        intrusions = 1
    flags = QualFlags(
        frozenset(defects.omit_numbers),
        frozenset({defects.duplicate_number}) if defects.duplicate_number is not None else frozenset(),
        (intrusion,) if text_numeral_out else (),
        intrusions,
        2,
    )
    return GeneratedClock(document, items, flags, tuple(shown), tuple(time), defects, seed)


def _displacement(v: int, d: float) -> float:
    return d if v % 2 else -d


def _rotation_estimate(marks, min_distinct: int) -> float:
    if len({v for v, _, _ in marks}) < min_distinct:
        return 0.0
    s = sum(math.sin(math.radians(brg - 30.0 * v)) for v, brg, _ in marks)
    c = sum(math.cos(math.radians(brg - 30.0 * v)) for v, brg, _ in marks)
    if math.hypot(s, c) < 1e-9:
        return 0.0
    return math.degrees(math.atan2(s, c)) % 360.0


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_reading_stimulus(time: tuple[int, int]) -> str:
    """Defect-free, uncaptioned clock showing ``time``."""
    return render_clock(time, DefectSpec()).document


def random_defect_spec(rng: random.Random) -> DefectSpec:
    """Sample a composite defect from ranges that sit clear of scoring thresholds."""
    kw: dict[str, Any] = {}
    if rng.random() < 0.3:
        kw["omit_numbers"] = frozenset(rng.sample(range(1, 13), rng.randint(1, 7)))
    if rng.random() < 0.15:
        kw["duplicate_number"] = rng.choice([v for v in range(1, 13) if v not in kw.get("omit_numbers", ())])
    if rng.random() < 0.2:
        kw["shuffle_order"] = True
    if rng.random() < 0.3:
        kw["no_anchor_first"] = True
    if rng.random() < 0.2:
        kw["open_contour_gap"] = rng.uniform(0.1, 0.3)
    if rng.random() < 0.2:
        kw["axis_ratio"] = rng.uniform(0.55, 0.75)
    r = rng.random()
    if r < 0.1:
        kw["equal_hands"] = True
    elif r < 0.2:
        kw["swap_hand_lengths"] = True
    if rng.random() < 0.15:
        kw["wrong_time"] = (rng.randint(1, 12), rng.randint(0, 59))
    if rng.random() < 0.15:
        kw["offset_center"] = rng.uniform(0.2, 0.35)
    if rng.random() < 0.15:
        kw["add_intrusion"] = rng.choice(["13", "brand", "0", *SHAPE_INTRUSIONS])
    if rng.random() < 0.15:
        kw["displace_numbers"] = rng.choice([-1, 1]) * rng.uniform(25.0, 60.0)
    return DefectSpec(**kw)


def random_time(rng: random.Random) -> tuple[int, int]:
    return rng.randint(1, 12), rng.randint(0, 59)


def replace_defects(spec: DefectSpec, **changes) -> DefectSpec:
    return replace(spec, **changes)


def defects_from_mapping(data: Mapping[str, Any]) -> DefectSpec:
    pairs = []
    for k, v in data.items():
        if isinstance(v, (list, tuple, set, frozenset)):
            v = ",".join(str(x) for x in v)
        pairs.append(f"{k}={v}")
    return DefectSpec.from_pairs(pairs)
