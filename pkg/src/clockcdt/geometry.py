"""Clock-specific feature extraction from a parsed :class:`~clockcdt.scene.Scene`.

All distance thresholds are fractions of the fitted contour's mean radius, so
every extracted dimensionless quantity is invariant under rigid motion and
uniform scaling.  Bearings are measured clockwise from the 12 o'clock
direction of the page (SVG's y axis points down); the estimated rotation of
the dial relative to the page is reported separately in
:attr:`ClockFeatures.dial_rotation` so downstream scoring can use bearings
relative to the drawn dial.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateInput, OutOfRange
from .scene import Point, Primitive, PrimitiveKind, Scene

ANCHOR_NUMERALS = (12, 3, 6, 9)

_ROMAN = {
    "I": 1, "II": 2, "III": 3, "IIII": 4, "IV": 4, "V": 5, "VI": 6, "VII": 7,
    "VIII": 8, "IX": 9, "X": 10, "XI": 11, "XII": 12,
}
_INTEGER_RE = re.compile(r"^\d+$")


@dataclass(frozen=True)
class GeometryConfig:
    """Detection thresholds, as fractions of the contour's mean radius."""

    contour_max_rms: float = 0.15
    hand_anchor_radius: float = 0.15
    hand_min_length: float = 0.20
    hand_max_length: float = 1.10
    hub_radius: float = 0.50
    junction_radius: float = 0.05
    dot_max_radius: float = 0.05
    thin_polygon_ratio: float = 0.25
    min_numbers_for_rotation: int = 3
    roman_numerals: bool = False


# ---------------------------------------------------------------- conic fit


@dataclass(frozen=True)
class ConicFit:
    center: Point
    semi_major: float
    semi_minor: float
    axis_ratio: float
    rms_residual: float
    orientation: float  # radians, direction of the major axis in page coordinates


def _distinct(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) > 1 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    return np.unique(pts, axis=0) if len(pts) else pts


def fit_conic(points) -> ConicFit:
    """Direct least-squares ellipse fit (Halir and Flusser's stable variant).

    Coordinates are centered and scaled before fitting so the result is
    equivariant under similarity transforms.  The rms residual is the radial
    distance between each point and the ellipse along the ray from the
    ellipse center.
    """
    pts = _distinct(points)
    if len(pts) < 5:
        raise DegenerateInput(f"need at least 5 distinct points, got {len(pts)}")
    mean = pts.mean(axis=0)
    centered = pts - mean
    scale = math.sqrt(float((centered ** 2).sum(axis=1).mean()))
    sv = np.linalg.svd(centered, compute_uv=False)
    if scale == 0 or sv[-1] <= 1e-9 * sv[0]:
        raise DegenerateInput("points are collinear")
    x, y = (centered / scale).T
    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1, s2, s3 = d1.T @ d1, d1.T @ d2, d2.T @ d2
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError as exc:
        raise DegenerateInput("singular scatter matrix") from exc
    m = s1 + s2 @ t
    m = np.array([m[2] / 2, -m[1], m[0] / 2])
    _, vecs = np.linalg.eig(m)
    vecs = np.real(vecs)
    cond = 4 * vecs[0] * vecs[2] - vecs[1] ** 2
    good = np.flatnonzero(cond > 0)
    if len(good) == 0:
        raise DegenerateInput("no elliptical solution")
    a1 = vecs[:, good[np.argmax(cond[good])]]
    a, b, c = a1
    d, e, f = t @ a1
    # center of the conic
    det = 4 * a * c - b * b
    x0 = (b * e - 2 * c * d) / det
    y0 = (b * d - 2 * a * e) / det
    f0 = a * x0 * x0 + b * x0 * y0 + c * y0 * y0 + d * x0 + e * y0 + f
    lam, evec = np.linalg.eigh(np.array([[a, b / 2], [b / 2, c]]))
    with np.errstate(invalid="ignore", divide="ignore"):
        axes = np.sqrt(-f0 / lam)
    if not np.all(np.isfinite(axes)) or np.any(axes <= 0):
        raise DegenerateInput("fit is not a real ellipse")
    major_idx = int(np.argmax(axes))
    semi_major = float(axes[major_idx]) * scale
    semi_minor = float(axes[1 - major_idx]) * scale
    direction = evec[:, major_idx]
    orientation = math.atan2(direction[1], direction[0])
    center = (float(mean[0] + x0 * scale), float(mean[1] + y0 * scale))
    fit = ConicFit(center, semi_major, semi_minor, semi_minor / semi_major, 0.0, orientation)
    rho = normalized_radius_array(fit, pts)
    dist = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1])
    with np.errstate(invalid="ignore", divide="ignore"):
        resid = np.where(rho > 0, dist - dist / rho, semi_minor)
    rms = float(math.sqrt(float(np.mean(resid ** 2))))
    return ConicFit(center, semi_major, semi_minor, semi_minor / semi_major, rms, orientation)


def normalized_radius_array(fit, pts: np.ndarray) -> np.ndarray:
    """Elliptical radius of each point: 1 on the ellipse, <1 inside."""
    co, so = math.cos(fit.orientation), math.sin(fit.orientation)
    dx = pts[:, 0] - fit.center[0]
    dy = pts[:, 1] - fit.center[1]
    u = dx * co + dy * so
    v = -dx * so + dy * co
    return np.hypot(u / fit.semi_major, v / fit.semi_minor)


# ---------------------------------------------------------------- features


@dataclass(frozen=True)
class ContourFeature:
    center: Point
    semi_major: float
    semi_minor: float
    axis_ratio: float
    rms_residual: float
    closure_gap_fraction: float
    source_doc_order: int
    orientation: float = 0.0

    @property
    def mean_radius(self) -> float:
        return (self.semi_major + self.semi_minor) / 2

    @property
    def perimeter(self) -> float:
        a, b = self.semi_major, self.semi_minor
        h = ((a - b) / (a + b)) ** 2
        return math.pi * (a + b) * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))

    def normalized_radius(self, p: Point) -> float:
        return float(normalized_radius_array(self, np.array([p], dtype=float))[0])

    def bearing_of(self, p: Point) -> float:
        return bearing(self.center, p)


@dataclass(frozen=True)
class NumberMark:
    value: int
    bearing: float
    radial_fraction: float
    doc_order: int


@dataclass(frozen=True)
class HandMark:
    tip_bearing: float
    length: float
    anchor_distance: float
    doc_order: int
    anchor: Point
    tip: Point
    tip_radial_fraction: float


class CenterProvenance(str, Enum):
    EXPLICIT_DOT = "ExplicitDot"
    HAND_JUNCTION = "HandJunction"


@dataclass(frozen=True)
class CenterCandidate:
    point: Point
    provenance: CenterProvenance
    doc_order: int | None = None


@dataclass(frozen=True)
class ClockFeatures:
    contour: ContourFeature | None
    numbers: tuple[NumberMark, ...] = ()
    extra_texts: tuple[tuple[str, Point], ...] = ()
    hands: tuple[HandMark, ...] = ()
    center_candidate: CenterCandidate | None = None
    foreign_marks: int = 0
    dial_rotation: float = 0.0
    unplaced_numerals: tuple[int, ...] = ()
    non_clock_primitives: int = 0
    config: GeometryConfig = field(default_factory=GeometryConfig)

    def relative_bearing(self, b: float) -> float:
        return (b - self.dial_rotation) % 360.0


def bearing(origin: Point, p: Point) -> float:
    """Degrees clockwise from 12 o'clock (page up) of ``p`` seen from ``origin``."""
    dx = p[0] - origin[0]
    dy = p[1] - origin[1]
    return math.degrees(math.atan2(dx, -dy)) % 360.0


def circular_distance(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def bearing_of_numeral(k: int) -> float:
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= 12:
        raise OutOfRange(f"numeral must be in 1..12, got {k!r}")
    return float((30 * int(k)) % 360)


def parse_numeral(text: str, roman: bool = False) -> int | None:
    """Integer value of a dial label, or None when it is not a 1..12 numeral."""
    s = text.strip()
    if _INTEGER_RE.match(s):
        v = int(s)
        return v if 1 <= v <= 12 else None
    if roman:
        return _ROMAN.get(s.upper())
    return None


def is_out_of_range_numeral(text: str) -> bool:
    s = text.strip()
    return bool(_INTEGER_RE.match(s)) and not 1 <= int(s) <= 12


def detect_contour(scene: Scene, cfg: GeometryConfig = GeometryConfig()) -> ContourFeature | None:
    best: ContourFeature | None = None
    for prim in scene.primitives:
        if prim.kind not in (PrimitiveKind.CLOSED_CURVE, PrimitiveKind.OPEN_POLYLINE):
            continue
        try:
            fit = fit_conic(prim.vertices)
        except DegenerateInput:
            continue
        mean_r = (fit.semi_major + fit.semi_minor) / 2
        if fit.rms_residual > cfg.contour_max_rms * mean_r:
            continue
        gap = 0.0
        cand = ContourFeature(
            fit.center, fit.semi_major, fit.semi_minor, fit.axis_ratio,
            fit.rms_residual, 0.0, prim.doc_order, fit.orientation,
        )
        if prim.kind is PrimitiveKind.OPEN_POLYLINE:
            (x0, y0), (x1, y1) = prim.vertices[0], prim.vertices[-1]
            gap = min(math.hypot(x1 - x0, y1 - y0) / cand.perimeter, 1.0)
            cand = ContourFeature(
                cand.center, cand.semi_major, cand.semi_minor, cand.axis_ratio,
                cand.rms_residual, gap, cand.source_doc_order, cand.orientation,
            )
        if best is None or cand.mean_radius > best.mean_radius:
            best = cand
    return best


def detect_numbers(
    scene: Scene, contour: ContourFeature, cfg: GeometryConfig = GeometryConfig()
) -> tuple[list[NumberMark], list[tuple[str, Point]]]:
    numbers: list[NumberMark] = []
    extra: list[tuple[str, Point]] = []
    for prim in scene.texts:
        text = prim.text or ""
        value = parse_numeral(text, cfg.roman_numerals)
        if value is None:
            extra.append((text, prim.anchor))
            continue
        numbers.append(NumberMark(
            value, contour.bearing_of(prim.anchor),
            contour.normalized_radius(prim.anchor), prim.doc_order,
        ))
    numbers.sort(key=lambda n: n.doc_order)
    return numbers, extra


def _hand_geometry(prim: Primitive, thin_ratio: float) -> tuple[Point, Point] | None:
    if prim.kind is PrimitiveKind.SEGMENT:
        return prim.vertices[0], prim.vertices[1]
    if prim.kind is PrimitiveKind.OPEN_POLYLINE and len(prim.vertices) == 2:
        return prim.vertices[0], prim.vertices[1]
    if prim.kind is PrimitiveKind.CLOSED_CURVE:
        # thin filled polygon: reduce to its medial segment along the principal axis
        pts = _distinct(prim.vertices)
        if len(pts) < 3:
            return None
        centroid = pts.mean(axis=0)
        _, s, vt = np.linalg.svd(pts - centroid, full_matrices=False)
        axis = vt[0]
        along = (pts - centroid) @ axis
        across = (pts - centroid) @ vt[1]
        length = along.max() - along.min()
        width = across.max() - across.min()
        if length <= 0 or width > thin_ratio * length:
            return None
        p = centroid + along.min() * axis
        q = centroid + along.max() * axis
        return (float(p[0]), float(p[1])), (float(q[0]), float(q[1]))
    return None


def _dist(p: Point, q: Point) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def detect_hands(
    scene: Scene,
    contour: ContourFeature,
    cfg: GeometryConfig = GeometryConfig(),
    exclude: frozenset[int] = frozenset(),
) -> list[HandMark]:
    """Segments radiating from the dial center (or from a shared hub inside it).

    A candidate qualifies when its length lies within the configured band and
    either one endpoint sits within ``hand_anchor_radius`` of the contour
    center, or it shares an endpoint (within ``junction_radius``) with another
    candidate at a hub no farther than ``hub_radius`` from the center.
    """
    r = contour.mean_radius
    c = contour.center
    cands: list[tuple[int, Point, Point]] = []
    for prim in scene.primitives:
        if prim.doc_order == contour.source_doc_order or prim.doc_order in exclude:
            continue
        ends = _hand_geometry(prim, cfg.thin_polygon_ratio)
        if ends is None:
            continue
        length = _dist(*ends)
        if not cfg.hand_min_length * r <= length <= cfg.hand_max_length * r:
            continue
        cands.append((prim.doc_order, ends[0], ends[1]))

    # a shared hub outranks proximity to the center when choosing the anchor end
    anchors: dict[int, Point] = {}
    for i, (oi, pi, qi) in enumerate(cands):
        for oj, pj, qj in cands[i + 1:]:
            for ei in (pi, qi):
                for ej in (pj, qj):
                    if _dist(ei, ej) > cfg.junction_radius * r:
                        continue
                    hub = ((ei[0] + ej[0]) / 2, (ei[1] + ej[1]) / 2)
                    if _dist(hub, c) > cfg.hub_radius * r:
                        continue
                    anchors.setdefault(oi, ei)
                    anchors.setdefault(oj, ej)
    for order, p, q in cands:
        prox = p if _dist(p, c) <= _dist(q, c) else q
        if order not in anchors and _dist(prox, c) <= cfg.hand_anchor_radius * r:
            anchors[order] = prox

    hands = []
    for order, p, q in cands:
        if order not in anchors:
            continue
        anchor = anchors[order]
        tip = q if anchor == p else p
        hands.append(HandMark(
            contour.bearing_of(tip), _dist(p, q), _dist(anchor, c), order,
            anchor, tip, contour.normalized_radius(tip),
        ))
    return hands


def _find_dot(scene: Scene, contour: ContourFeature, cfg: GeometryConfig) -> CenterCandidate | None:
    r = contour.mean_radius
    best = None
    best_d = math.inf
    for prim in scene.primitives:
        if prim.kind is not PrimitiveKind.CLOSED_CURVE or prim.doc_order == contour.source_doc_order:
            continue
        pts = _distinct(prim.vertices)
        centroid = pts.mean(axis=0)
        radius = float(np.hypot(*(pts - centroid).T).mean())
        if radius > cfg.dot_max_radius * r:
            continue
        point = (float(centroid[0]), float(centroid[1]))
        d = _dist(point, contour.center)
        if d <= cfg.hub_radius * r and d < best_d:
            best, best_d = CenterCandidate(point, CenterProvenance.EXPLICIT_DOT, prim.doc_order), d
    return best


def detect_center(
    scene: Scene,
    contour: ContourFeature,
    hands: list[HandMark],
    cfg: GeometryConfig = GeometryConfig(),
) -> CenterCandidate | None:
    dot = _find_dot(scene, contour, cfg)
    if dot is not None:
        return dot
    best = None
    best_d = cfg.junction_radius * contour.mean_radius
    for i, h in enumerate(hands):
        for g in hands[i + 1:]:
            d = _dist(h.anchor, g.anchor)
            if d <= best_d:
                mid = ((h.anchor[0] + g.anchor[0]) / 2, (h.anchor[1] + g.anchor[1]) / 2)
                best, best_d = CenterCandidate(mid, CenterProvenance.HAND_JUNCTION), d
    return best


def estimate_dial_rotation(numbers: list[NumberMark], min_distinct: int = 3) -> float:
    """Circular mean offset of numerals from their canonical bearings.

    Returns 0 when fewer than ``min_distinct`` distinct numerals are present,
    i.e. the page orientation is trusted.
    """
    if len({n.value for n in numbers}) < min_distinct:
        return 0.0
    offs = np.radians([n.bearing - bearing_of_numeral(n.value) for n in numbers])
    s, c = np.sin(offs).sum(), np.cos(offs).sum()
    if math.hypot(s, c) < 1e-9:
        return 0.0
    return math.degrees(math.atan2(s, c)) % 360.0


def extract_features(scene: Scene, cfg: GeometryConfig = GeometryConfig()) -> ClockFeatures:
    contour = detect_contour(scene, cfg)
    if contour is None:
        numerals = []
        extra = []
        for prim in scene.texts:
            v = parse_numeral(prim.text or "", cfg.roman_numerals)
            if v is None:
                extra.append((prim.text or "", prim.anchor))
            else:
                numerals.append(v)
        curves = sum(1 for p in scene.primitives if p.is_curve)
        return ClockFeatures(
            None, extra_texts=tuple(extra), foreign_marks=scene.foreign_marks,
            unplaced_numerals=tuple(numerals), non_clock_primitives=curves, config=cfg,
        )
    numbers, extra = detect_numbers(scene, contour, cfg)
    dot = _find_dot(scene, contour, cfg)
    exclude = frozenset({dot.doc_order}) if dot is not None else frozenset()
    hands = detect_hands(scene, contour, cfg, exclude)
    center = dot if dot is not None else detect_center(scene, contour, hands, cfg)
    used = {contour.source_doc_order} | {h.doc_order for h in hands} | set(exclude)
    non_clock = sum(1 for p in scene.primitives if p.is_curve and p.doc_order not in used)
    return ClockFeatures(
        contour,
        tuple(numbers),
        tuple(extra),
        tuple(hands),
        center,
        scene.foreign_marks,
        estimate_dial_rotation(numbers, cfg.min_numbers_for_rotation),
        (),
        non_clock,
        cfg,
    )
