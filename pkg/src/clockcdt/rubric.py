"""Thirteen-item clock drawing rubric, weighted score conversion and norm brackets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

from .errors import ClockError, ConfigInvalid, OutOfRange, RangeViolation
from .geometry import (
    ANCHOR_NUMERALS,
    ClockFeatures,
    GeometryConfig,
    bearing_of_numeral,
    circular_distance,
    extract_features,
    is_out_of_range_numeral,
)
from .scene import Scene, parse_drawing

ITEM_NAMES = (
    "numbers_seq", "numbers_pres", "numbers_loc",
    "contour_pres", "contour_acc", "contour_clos", "contour_sym",
    "hands_pres", "hands_conn", "hands_prop", "hands_corr",
    "center_pres", "center_loc",
)
ITEM_MAX = {name: 2 if name in ("numbers_seq", "hands_prop") else 1 for name in ITEM_NAMES}

BRACKETS = ("Very Low", "Low", "Borderline", "Low Average", "Average")
# labels used for the two ends of the weighted scale in the administration manual
BRACKET_ALIASES = {"Very Poor": "Very Low", "Normal": "Average"}

DEFAULT_WEIGHT_TABLE: dict[int, int] = {
    **{raw: 0 for raw in range(0, 5)},
    **{raw: 1 for raw in range(5, 9)},
    9: 2,
    10: 3,
    11: 3,
    **{raw: 4 for raw in range(12, 16)},
}


@dataclass(frozen=True)
class ItemScores:
    numbers_seq: int = 0
    numbers_pres: int = 0
    numbers_loc: int = 0
    contour_pres: int = 0
    contour_acc: int = 0
    contour_clos: int = 0
    contour_sym: int = 0
    hands_pres: int = 0
    hands_conn: int = 0
    hands_prop: int = 0
    hands_corr: int = 0
    center_pres: int = 0
    center_loc: int = 0

    def __post_init__(self):
        for name in ITEM_NAMES:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= ITEM_MAX[name]:
                raise RangeViolation(f"{name}={v!r} outside 0..{ITEM_MAX[name]}")

    @classmethod
    def from_sequence(cls, values: Iterable[int]) -> ItemScores:
        values = [int(v) for v in values]
        if len(values) != len(ITEM_NAMES):
            raise RangeViolation(f"expected {len(ITEM_NAMES)} item values, got {len(values)}")
        return cls(*values)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(getattr(self, n) for n in ITEM_NAMES)

    @property
    def total(self) -> int:
        return sum(self.as_tuple())


@dataclass(frozen=True)
class QualFlags:
    omitted_numbers: frozenset[int] = frozenset(range(1, 13))
    duplicated_numbers: frozenset[int] = frozenset()
    out_of_range_numbers: tuple[str, ...] = ()
    intrusion_count: int = 0
    hand_count: int = 0
    failure: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "omitted_numbers": sorted(self.omitted_numbers),
            "duplicated_numbers": sorted(self.duplicated_numbers),
            "out_of_range_numbers": list(self.out_of_range_numbers),
            "intrusion_count": self.intrusion_count,
            "hand_count": self.hand_count,
            "failure": self.failure,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> QualFlags:
        return cls(
            frozenset(d.get("omitted_numbers", ())),
            frozenset(d.get("duplicated_numbers", ())),
            tuple(d.get("out_of_range_numbers", ())),
            int(d.get("intrusion_count", 0)),
            int(d.get("hand_count", 0)),
            d.get("failure"),
        )


@dataclass(frozen=True)
class RubricConfig:
    target_time: tuple[int, int] = (9, 10)
    angle_tolerance: float = 15.0
    prop_clear_ratio: float = 0.80
    prop_marginal_ratio: float = 0.95
    loc_radial_band: tuple[float, float] = (0.55, 1.02)
    accommodation_margin: float = 1.02
    center_loc_tolerance: float = 0.10
    closure_tolerance: float = 0.05
    symmetry_min_axis_ratio: float = 0.85
    symmetry_max_rms: float = 0.10
    weight_table: Mapping[int, int] = field(default_factory=lambda: dict(DEFAULT_WEIGHT_TABLE))
    geometry: GeometryConfig = field(default_factory=GeometryConfig)

    def __post_init__(self):
        h, m = self.target_time
        if not (1 <= h <= 12 and 0 <= m <= 59):
            raise ConfigInvalid(f"target_time {self.target_time!r} is not a clock time")
        if not 0 < self.prop_clear_ratio < self.prop_marginal_ratio <= 1:
            raise ConfigInvalid("need 0 < prop_clear_ratio < prop_marginal_ratio <= 1")
        lo, hi = self.loc_radial_band
        if not 0 <= lo < hi:
            raise ConfigInvalid("loc_radial_band must satisfy 0 <= min < max")
        if self.angle_tolerance <= 0:
            raise ConfigInvalid("angle_tolerance must be positive")
        check_weight_table(self.weight_table)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> RubricConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid(f"unknown rubric keys: {sorted(unknown)}")
        kw = dict(data)
        if "target_time" in kw:
            kw["target_time"] = parse_time(kw["target_time"])
        if "loc_radial_band" in kw:
            kw["loc_radial_band"] = tuple(float(v) for v in kw["loc_radial_band"])
        if "weight_table" in kw:
            kw["weight_table"] = {int(k): int(v) for k, v in dict(kw["weight_table"]).items()}
        if "geometry" in kw:
            try:
                kw["geometry"] = GeometryConfig(**kw["geometry"])
            except TypeError as exc:
                raise ConfigInvalid(str(exc)) from exc
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> RubricConfig:
        """Load from a YAML (or JSON) file; top-level keys mirror the field names."""
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigInvalid(f"{path}: expected a mapping")
        return cls.from_mapping(data)

    def to_mapping(self) -> dict[str, Any]:
        d = asdict(self)
        d["target_time"] = "%d:%02d" % self.target_time
        d["loc_radial_band"] = list(self.loc_radial_band)
        d["weight_table"] = {str(k): v for k, v in sorted(self.weight_table.items())}
        return d


def parse_time(value) -> tuple[int, int]:
    if isinstance(value, str):
        try:
            h, m = value.strip().split(":")
            return int(h), int(m)
        except ValueError as exc:
            raise ConfigInvalid(f"bad time {value!r}; expected H:MM") from exc
    h, m = value
    return int(h), int(m)


def check_weight_table(table: Mapping[int, int]) -> None:
    if set(table) != set(range(16)):
        raise ConfigInvalid("weight_table must map every raw score 0..15")
    values = [table[k] for k in range(16)]
    if any(not 0 <= v <= 4 for v in values):
        raise ConfigInvalid("weighted scores must lie in 0..4")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ConfigInvalid("weight_table must be nondecreasing")


def weight_raw(total_raw: int, table: Mapping[int, int] = DEFAULT_WEIGHT_TABLE) -> int:
    if not isinstance(total_raw, int) or total_raw not in table:
        raise OutOfRange(f"raw score {total_raw!r} outside 0..15")
    return table[total_raw]


def norm_bracket(weighted: int) -> str:
    if not isinstance(weighted, int) or not 0 <= weighted <= 4:
        raise OutOfRange(f"weighted score {weighted!r} outside 0..4")
    return BRACKETS[weighted]


def canonical_bracket(label: str) -> str:
    label = BRACKET_ALIASES.get(label, label)
    if label not in BRACKETS:
        raise OutOfRange(f"unknown bracket {label!r}")
    return label


@dataclass(frozen=True)
class ScoreReport:
    items: ItemScores
    total_raw: int
    weighted_raw: int
    bracket: str
    flags: QualFlags
    rationales: Mapping[str, str]

    def to_dict(self) -> dict[str, Any]:
        return {
            "items": dict(zip(ITEM_NAMES, self.items.as_tuple())),
            "total_raw": self.total_raw,
            "weighted_raw": self.weighted_raw,
            "bracket": self.bracket,
            "flags": self.flags.to_dict(),
            "rationales": dict(self.rationales),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ScoreReport:
        items = ItemScores(**d["items"])
        return cls(items, d["total_raw"], d["weighted_raw"], d["bracket"],
                   QualFlags.from_dict(d["flags"]), dict(d.get("rationales", {})))


def build_report(
    items: ItemScores,
    flags: QualFlags,
    rationales: Mapping[str, str] | None = None,
    table: Mapping[int, int] = DEFAULT_WEIGHT_TABLE,
) -> ScoreReport:
    total = items.total
    weighted = weight_raw(total, table)
    return ScoreReport(items, total, weighted, norm_bracket(weighted), flags, dict(rationales or {}))


def zero_report(failure: str, cfg: RubricConfig | None = None) -> ScoreReport:
    """All-zero report for a response that yielded no scorable clock."""
    cfg = cfg or RubricConfig()
    rationale = {name: f"not scored: {failure}" for name in ITEM_NAMES}
    return build_report(ItemScores(), QualFlags(failure=failure), rationale, cfg.weight_table)


# ---------------------------------------------------------------- item scorers


def _clock_position(v: int) -> int:
    return 0 if v == 12 else v


def _ascending(values: list[int], key) -> bool:
    keys = [key(v) for v in values]
    return all(a < b for a, b in zip(keys, keys[1:]))


def sequence_score(values: list[int]) -> int:
    """Sequencing points for numerals listed in the order they were drawn."""
    if not values:
        return 0
    anchors = [v for v in values if v in ANCHOR_NUMERALS]
    first_non = next((i for i, v in enumerate(values) if v not in ANCHOR_NUMERALS), len(values))
    last_anchor = max((i for i, v in enumerate(values) if v in ANCHOR_NUMERALS), default=-1)
    non = [v for v in values if v not in ANCHOR_NUMERALS]
    if (
        sorted(anchors) == sorted(ANCHOR_NUMERALS)
        and last_anchor < first_non
        and _ascending(anchors, _clock_position)
        and _ascending(non, _clock_position)
    ):
        return 2
    if _ascending(values, _clock_position) or _ascending(values, lambda v: v):
        return 1
    return 0


def _out_of_range(features: ClockFeatures) -> list[str]:
    return [t for t, _ in features.extra_texts if is_out_of_range_numeral(t)]


def score_numbers(features: ClockFeatures, cfg: RubricConfig = RubricConfig()) -> tuple[int, int, int]:
    if features.contour is None:
        return 0, 0, 0
    values = [n.value for n in features.numbers]
    seq = sequence_score(values)
    pres = int(sorted(values) == list(range(1, 13)) and not _out_of_range(features))
    lo, hi = cfg.loc_radial_band
    loc = int(bool(values) and all(
        circular_distance(features.relative_bearing(n.bearing), bearing_of_numeral(n.value))
        <= cfg.angle_tolerance
        and lo <= n.radial_fraction <= hi
        for n in features.numbers
    ))
    return seq, pres, loc


def score_contour(features: ClockFeatures, cfg: RubricConfig = RubricConfig()) -> tuple[int, int, int, int]:
    c = features.contour
    if c is None:
        return 0, 0, 0, 0
    margin = cfg.accommodation_margin
    acc = int(all(n.radial_fraction <= margin for n in features.numbers)
              and all(h.tip_radial_fraction <= margin for h in features.hands))
    clos = int(c.closure_gap_fraction <= cfg.closure_tolerance)
    sym = int(c.axis_ratio >= cfg.symmetry_min_axis_ratio
              and c.rms_residual <= cfg.symmetry_max_rms * c.mean_radius)
    return 1, acc, clos, sym


def _hands_connected(features: ClockFeatures) -> bool:
    if features.contour is None:
        return False
    limit = features.config.junction_radius * features.contour.mean_radius
    hands = features.hands
    for i, h in enumerate(hands):
        for g in hands[i + 1:]:
            dx = h.anchor[0] - g.anchor[0]
            dy = h.anchor[1] - g.anchor[1]
            if (dx * dx + dy * dy) ** 0.5 <= limit:
                return True
    return False


def hand_proportion(hands, cfg: RubricConfig = RubricConfig()) -> int:
    if len(hands) != 2:
        return 0
    short, long_ = sorted(h.length for h in hands)
    ratio = short / long_
    if ratio <= cfg.prop_clear_ratio:
        return 2
    if ratio <= cfg.prop_marginal_ratio:
        return 1
    return 0


def score_hands(features: ClockFeatures, cfg: RubricConfig = RubricConfig()) -> tuple[int, int, int, int]:
    hands = features.hands
    pres = int(len(hands) == 2)
    conn = int(_hands_connected(features))
    prop = hand_proportion(hands, cfg)
    corr = 0
    if prop >= 1:
        short, long_ = sorted(hands, key=lambda h: h.length)
        h, m = cfg.target_time
        want_short = (30 * (h + m / 60)) % 360
        want_long = (6 * m) % 360
        corr = int(
            circular_distance(features.relative_bearing(short.tip_bearing), want_short) <= cfg.angle_tolerance
            and circular_distance(features.relative_bearing(long_.tip_bearing), want_long) <= cfg.angle_tolerance
        )
    return pres, conn, prop, corr


def score_center(features: ClockFeatures, cfg: RubricConfig = RubricConfig()) -> tuple[int, int]:
    cand = features.center_candidate
    if cand is None or features.contour is None:
        return 0, 0
    c = features.contour
    dx = cand.point[0] - c.center[0]
    dy = cand.point[1] - c.center[1]
    loc = int((dx * dx + dy * dy) ** 0.5 <= cfg.center_loc_tolerance * c.mean_radius)
    return 1, loc


def qual_flags(features: ClockFeatures) -> QualFlags:
    values = [n.value for n in features.numbers] + list(features.unplaced_numerals)
    present = set(values)
    dups = {v for v in present if values.count(v) > 1}
    intrusions = features.foreign_marks + len(features.extra_texts) + features.non_clock_primitives
    return QualFlags(
        frozenset(set(range(1, 13)) - present),
        frozenset(dups),
        tuple(_out_of_range(features)),
        intrusions,
        len(features.hands),
    )


def _rationales(features: ClockFeatures, items: ItemScores, flags: QualFlags, cfg: RubricConfig) -> dict[str, str]:
    c = features.contour
    out: dict[str, str] = {}
    if c is None:
        for name in ITEM_NAMES:
            out[name] = "no contour detected; item not scorable"
        if features.hands or features.numbers:
            out["hands_pres"] = "hands are only located relative to a contour"
        return out
    order = ",".join(str(n.value) for n in features.numbers) or "none"
    out["numbers_seq"] = f"numerals in drawing order: {order}"
    missing = ",".join(map(str, sorted(flags.omitted_numbers))) or "none"
    dups = ",".join(map(str, sorted(flags.duplicated_numbers))) or "none"
    out["numbers_pres"] = (f"missing {missing}; duplicated {dups}; "
                           f"out of range {list(flags.out_of_range_numbers) or 'none'}")
    worst = max((circular_distance(features.relative_bearing(n.bearing), bearing_of_numeral(n.value))
                 for n in features.numbers), default=0.0)
    out["numbers_loc"] = f"largest angular error {worst:.1f} deg (tolerance {cfg.angle_tolerance:g})"
    out["contour_pres"] = f"contour from element #{c.source_doc_order}, mean radius {c.mean_radius:.2f}"
    out["contour_acc"] = "all numerals and hand tips inside" if items.contour_acc else "elements outside contour"
    out["contour_clos"] = f"gap {c.closure_gap_fraction:.3f} of perimeter (limit {cfg.closure_tolerance:g})"
    out["contour_sym"] = f"axis ratio {c.axis_ratio:.3f}, rms residual {c.rms_residual / c.mean_radius:.3f} r"
    out["hands_pres"] = f"{len(features.hands)} hand(s) detected"
    out["hands_conn"] = "hands meet at a junction" if items.hands_conn else "no two hands meet"
    if len(features.hands) == 2:
        a, b = sorted(h.length for h in features.hands)
        out["hands_prop"] = f"short/long length ratio {a / b:.3f}"
    else:
        out["hands_prop"] = "proportion needs exactly two hands"
    out["hands_corr"] = "hands show %d:%02d" % cfg.target_time if items.hands_corr else \
        "hands do not show %d:%02d" % cfg.target_time
    cand = features.center_candidate
    out["center_pres"] = f"center from {cand.provenance.value}" if cand else "no center focal point"
    out["center_loc"] = "center in the middle of the contour" if items.center_loc else "center off-middle or absent"
    return out


def score_features(features: ClockFeatures, cfg: RubricConfig = RubricConfig()) -> ScoreReport:
    values = score_numbers(features, cfg) + score_contour(features, cfg) + \
        score_hands(features, cfg) + score_center(features, cfg)
    items = ItemScores(*values)
    flags = qual_flags(features)
    return build_report(items, flags, _rationales(features, items, flags, cfg), cfg.weight_table)


def score_drawing(scene: Scene, cfg: RubricConfig = RubricConfig()) -> ScoreReport:
    return score_features(extract_features(scene, cfg.geometry), cfg)


def score_document(document_text: str, cfg: RubricConfig = RubricConfig()) -> ScoreReport:
    """Parse and score; unparseable or empty drawings score zero with a failure flag."""
    try:
        scene = parse_drawing(document_text)
    except ClockError as exc:
        return zero_report(type(exc).__name__, cfg)
    return score_drawing(scene, cfg)


def with_target(cfg: RubricConfig, time: tuple[int, int]) -> RubricConfig:
    return replace(cfg, target_time=tuple(time))
