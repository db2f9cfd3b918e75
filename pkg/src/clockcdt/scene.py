"""Parse the SVG subset emitted by generative models into a flat geometric scene.

Accepted elements: ``circle``, ``ellipse``, ``rect``, ``line``, ``polyline``,
``polygon``, ``path`` and ``text``.  ``svg``, ``g`` and ``a`` are treated as
containers and their ``transform`` attributes (matrix, translate, scale,
rotate, skewX, skewY) are composed onto child geometry.  ``defs`` is
descended into without being counted.  Descriptive elements (``title``,
``desc``, ``metadata``, ``style``) are ignored.  Anything else (images,
gradients, ``use``, ``foreignObject`` ...) is counted as a foreign mark.

Curves are flattened to polylines whose maximum chord deviation from the
exact curve is at most ``flatten_tolerance`` user units.  Rounded rectangle
corners (``rx``/``ry`` on ``rect``) are ignored.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

from .errors import EmptyDrawing, MalformedDocument, UnsupportedCommand

Point = tuple[float, float]
# (a, b, c, d, e, f) maps (x, y) -> (a*x + c*y + e, b*x + d*y + f)
Affine = tuple[float, float, float, float, float, float]

IDENTITY: Affine = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)
DEFAULT_TOLERANCE_FRACTION = 0.005
MIN_ELLIPSE_SEGMENTS = 16

_SHAPES = {"circle", "ellipse", "rect", "line", "polyline", "polygon", "path", "text"}
_CONTAINERS = {"svg", "g", "a", "switch", "defs"}
_IGNORED = {"title", "desc", "metadata", "style"}


class PrimitiveKind(str, Enum):
    CLOSED_CURVE = "ClosedCurve"
    OPEN_POLYLINE = "OpenPolyline"
    SEGMENT = "Segment"
    TEXT_MARK = "TextMark"


@dataclass(frozen=True)
class Primitive:
    kind: PrimitiveKind
    vertices: tuple[Point, ...]
    doc_order: int
    text: str | None = None

    @property
    def anchor(self) -> Point:
        return self.vertices[0]

    @property
    def is_curve(self) -> bool:
        return self.kind is not PrimitiveKind.TEXT_MARK


@dataclass(frozen=True)
class Scene:
    primitives: tuple[Primitive, ...]
    foreign_marks: int
    bounds: tuple[float, float, float, float]

    @property
    def texts(self) -> list[Primitive]:
        return [p for p in self.primitives if p.kind is PrimitiveKind.TEXT_MARK]


class Subpath(NamedTuple):
    vertices: list[Point]
    closed: bool


# ---------------------------------------------------------------- affine maps


def compose(outer: Affine, inner: Affine) -> Affine:
    a1, b1, c1, d1, e1, f1 = outer
    a2, b2, c2, d2, e2, f2 = inner
    return (
        a1 * a2 + c1 * b2,
        b1 * a2 + d1 * b2,
        a1 * c2 + c1 * d2,
        b1 * c2 + d1 * d2,
        a1 * e2 + c1 * f2 + e1,
        b1 * e2 + d1 * f2 + f1,
    )


def apply(m: Affine, p: Point) -> Point:
    a, b, c, d, e, f = m
    x, y = p
    return (a * x + c * y + e, b * x + d * y + f)


def _max_stretch(m: Affine) -> float:
    """Largest singular value of the linear part of ``m``."""
    a, b, c, d = m[:4]
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = max(s * s / 4 - det * det, 0.0)
    return math.sqrt(s / 2 + math.sqrt(disc))


_TRANSFORM_RE = re.compile(r"([a-zA-Z]+)\s*\(([^)]*)\)")


def parse_transform(text: str | None) -> Affine:
    if not text:
        return IDENTITY
    m = IDENTITY
    pos = 0
    text = text.strip()
    for match in _TRANSFORM_RE.finditer(text):
        if text[pos:match.start()].strip(" ,\t\n"):
            raise MalformedDocument(f"bad transform {text!r}")
        pos = match.end()
        name = match.group(1)
        args = [float(v) for v in _NUMBER_RE.findall(match.group(2))]
        try:
            step = _transform_step(name, args)
        except (IndexError, ValueError) as exc:
            raise MalformedDocument(f"bad transform {text!r}") from exc
        m = compose(m, step)
    if text[pos:].strip(" ,\t\n"):
        raise MalformedDocument(f"bad transform {text!r}")
    return m


def _transform_step(name: str, args: list[float]) -> Affine:
    if name == "matrix":
        if len(args) != 6:
            raise ValueError
        return tuple(args)  # type: ignore[return-value]
    if name == "translate":
        return (1.0, 0.0, 0.0, 1.0, args[0], args[1] if len(args) > 1 else 0.0)
    if name == "scale":
        sx = args[0]
        sy = args[1] if len(args) > 1 else sx
        return (sx, 0.0, 0.0, sy, 0.0, 0.0)
    if name == "rotate":
        t = math.radians(args[0])
        rot = (math.cos(t), math.sin(t), -math.sin(t), math.cos(t), 0.0, 0.0)
        if len(args) >= 3:
            cx, cy = args[1], args[2]
            rot = compose((1, 0, 0, 1, cx, cy), compose(rot, (1, 0, 0, 1, -cx, -cy)))
        return rot
    if name == "skewX":
        return (1.0, 0.0, math.tan(math.radians(args[0])), 1.0, 0.0, 0.0)
    if name == "skewY":
        return (1.0, math.tan(math.radians(args[0])), 0.0, 1.0, 0.0, 0.0)
    raise ValueError(name)


# ---------------------------------------------------------------- flattening


def _ellipse_arc(
    center: Point,
    rx: float,
    ry: float,
    phi: float,
    theta0: float,
    dtheta: float,
    m: Affine,
    tol: float,
    full: bool = False,
) -> list[Point]:
    """Sample an elliptical arc (parameter angles in radians) under ``m``."""
    cp, sp = math.cos(phi), math.sin(phi)
    local = (rx * cp, rx * sp, -ry * sp, ry * cp, center[0], center[1])
    mm = compose(m, local)
    radius = _max_stretch(mm)
    if radius <= 0:
        return [apply(mm, (0.0, 0.0))]
    if tol >= radius:
        step = math.pi
    else:
        step = 2 * math.acos(1 - tol / radius)
    n = max(1, math.ceil(abs(dtheta) / step))
    if full:
        n = max(n, MIN_ELLIPSE_SEGMENTS)
    return [
        apply(mm, (math.cos(theta0 + dtheta * i / n), math.sin(theta0 + dtheta * i / n)))
        for i in range(n + 1)
    ]


def _bezier(ctrl: Sequence[Point], tol: float) -> list[Point]:
    """Uniformly subdivide a Bezier curve (already in user space).

    The segment count follows Wang's bound, rounded up to a power of two so a
    smaller tolerance always refines the previous subdivision.
    """
    deg = len(ctrl) - 1
    second = 0.0
    for i in range(deg - 1):
        dx = ctrl[i + 2][0] - 2 * ctrl[i + 1][0] + ctrl[i][0]
        dy = ctrl[i + 2][1] - 2 * ctrl[i + 1][1] + ctrl[i][1]
        second = max(second, math.hypot(dx, dy))
    n = 1
    if second > 0:
        need = math.sqrt(deg * (deg - 1) * second / (8 * tol))
        while n < need:
            n *= 2
    out = []
    for i in range(1, n + 1):
        t = i / n
        out.append(_de_casteljau(ctrl, t))
    return out


def _de_casteljau(ctrl: Sequence[Point], t: float) -> Point:
    pts = list(ctrl)
    while len(pts) > 1:
        pts = [
            ((1 - t) * p[0] + t * q[0], (1 - t) * p[1] + t * q[1])
            for p, q in zip(pts, pts[1:])
        ]
    return pts[0]


def _arc_to_center(
    p0: Point, rx: float, ry: float, phi_deg: float, large: bool, sweep: bool, p1: Point
):
    """Endpoint to center parameterization (SVG implementation notes F.6.5)."""
    phi = math.radians(phi_deg)
    cp, sp = math.cos(phi), math.sin(phi)
    dx2 = (p0[0] - p1[0]) / 2
    dy2 = (p0[1] - p1[1]) / 2
    x1p = cp * dx2 + sp * dy2
    y1p = -sp * dx2 + cp * dy2
    rx, ry = abs(rx), abs(ry)
    lam = (x1p / rx) ** 2 + (y1p / ry) ** 2
    if lam > 1:
        s = math.sqrt(lam)
        rx, ry = rx * s, ry * s
    num = rx * rx * ry * ry - rx * rx * y1p * y1p - ry * ry * x1p * x1p
    den = rx * rx * y1p * y1p + ry * ry * x1p * x1p
    coef = math.sqrt(max(num, 0.0) / den) if den > 0 else 0.0
    if large == sweep:
        coef = -coef
    cxp = coef * rx * y1p / ry
    cyp = -coef * ry * x1p / rx
    cx = cp * cxp - sp * cyp + (p0[0] + p1[0]) / 2
    cy = sp * cxp + cp * cyp + (p0[1] + p1[1]) / 2

    def angle(ux, uy, vx, vy):
        a = math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)
        return a

    ux, uy = (x1p - cxp) / rx, (y1p - cyp) / ry
    vx, vy = (-x1p - cxp) / rx, (-y1p - cyp) / ry
    theta0 = angle(1, 0, ux, uy)
    dtheta = angle(ux, uy, vx, vy)
    if not sweep and dtheta > 0:
        dtheta -= 2 * math.pi
    elif sweep and dtheta < 0:
        dtheta += 2 * math.pi
    return (cx, cy), rx, ry, phi, theta0, dtheta


_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_PATH_TOKEN_RE = re.compile(
    r"\s*,?\s*(?:(?P<cmd>[A-Za-z])|(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))"
)
_ARITY = {"M": 2, "L": 2, "H": 1, "V": 1, "C": 6, "S": 4, "Q": 4, "T": 2, "A": 7, "Z": 0}


def _tokenize_path(d: str) -> list[tuple[str, list[float]]]:
    pos = 0
    cmds: list[tuple[str, list[float]]] = []
    current: str | None = None
    args: list[float] = []
    while pos < len(d):
        if not d[pos:].strip(" \t\r\n,"):
            break
        if current is not None and current.upper() == "A" and len(args) % 7 in (3, 4):
            # arc flags are single characters and may be packed without separators
            m = re.compile(r"\s*,?\s*([01])").match(d, pos)
            if not m:
                raise MalformedDocument(f"bad arc flag in path near {d[pos:pos + 12]!r}")
            args.append(float(m.group(1)))
            pos = m.end()
            continue
        m = _PATH_TOKEN_RE.match(d, pos)
        if not m:
            raise MalformedDocument(f"unparseable path data near {d[pos:pos + 12]!r}")
        pos = m.end()
        if m.group("cmd"):
            letter = m.group("cmd")
            if letter.upper() not in _ARITY:
                raise UnsupportedCommand(f"unsupported path command {letter!r}")
            if current is not None:
                cmds.append((current, args))
            current, args = letter, []
        else:
            if current is None:
                raise MalformedDocument("path data must start with a command")
            args.append(float(m.group("num")))
    if current is not None:
        cmds.append((current, args))
    return cmds


def flatten_path(
    path_commands: str, flatten_tolerance: float, transform: Affine = IDENTITY
) -> list[Subpath]:
    """Flatten SVG path data into one polyline per subpath.

    Straight commands contribute their endpoints exactly; curved commands are
    subdivided so no point of the true curve lies farther than
    ``flatten_tolerance`` from the polyline.  Coordinates are returned in the
    space produced by ``transform``.
    """
    if flatten_tolerance <= 0:
        raise ValueError("flatten_tolerance must be positive")
    tol = flatten_tolerance
    subpaths: list[Subpath] = []
    verts: list[Point] = []
    cur: Point = (0.0, 0.0)
    start: Point = (0.0, 0.0)
    prev_ctrl: Point | None = None
    prev_kind = ""

    def flush(closed: bool) -> None:
        nonlocal verts
        if len(verts) >= 2 or (closed and verts):
            subpaths.append(Subpath(verts, closed))
        verts = []

    def emit(p: Point) -> None:
        verts.append(apply(transform, p))

    for letter, args in _tokenize_path(path_commands):
        up = letter.upper()
        rel = letter != up
        arity = _ARITY[up]
        if up == "Z":
            if args:
                raise MalformedDocument("close command takes no arguments")
            if verts:
                flush(True)
            cur = start
            prev_ctrl, prev_kind = None, "Z"
            continue
        if not args or len(args) % arity:
            raise MalformedDocument(f"command {letter!r} expects multiples of {arity} values")
        for k in range(0, len(args), arity):
            a = args[k:k + arity]
            ox, oy = cur if rel else (0.0, 0.0)
            if up == "M":
                p = (a[0] + ox, a[1] + oy)
                if k == 0:
                    flush(False)
                    start = p
                    emit(p)
                else:
                    if not verts:
                        emit(cur)
                    emit(p)
                cur, prev_ctrl, prev_kind = p, None, "M"
                continue
            if not verts:
                emit(cur)
            if up == "L":
                p = (a[0] + ox, a[1] + oy)
                emit(p)
                prev_ctrl = None
            elif up == "H":
                p = (a[0] + ox, cur[1])
                emit(p)
                prev_ctrl = None
            elif up == "V":
                p = (cur[0], a[0] + oy)
                emit(p)
                prev_ctrl = None
            elif up in ("C", "S"):
                if up == "C":
                    c1 = (a[0] + ox, a[1] + oy)
                    c2 = (a[2] + ox, a[3] + oy)
                    p = (a[4] + ox, a[5] + oy)
                else:
                    if prev_kind in ("C", "S") and prev_ctrl is not None:
                        c1 = (2 * cur[0] - prev_ctrl[0], 2 * cur[1] - prev_ctrl[1])
                    else:
                        c1 = cur
                    c2 = (a[0] + ox, a[1] + oy)
                    p = (a[2] + ox, a[3] + oy)
                ctrl = [apply(transform, q) for q in (cur, c1, c2, p)]
                verts.extend(_bezier(ctrl, tol))
                prev_ctrl = c2
            elif up in ("Q", "T"):
                if up == "Q":
                    c = (a[0] + ox, a[1] + oy)
                    p = (a[2] + ox, a[3] + oy)
                else:
                    if prev_kind in ("Q", "T") and prev_ctrl is not None:
                        c = (2 * cur[0] - prev_ctrl[0], 2 * cur[1] - prev_ctrl[1])
                    else:
                        c = cur
                    p = (a[0] + ox, a[1] + oy)
                ctrl = [apply(transform, q) for q in (cur, c, p)]
                verts.extend(_bezier(ctrl, tol))
                prev_ctrl = c
            elif up == "A":
                p = (a[5] + ox, a[6] + oy)
                rx, ry = a[0], a[1]
                if p == cur:
                    pass
                elif rx == 0 or ry == 0:
                    emit(p)
                else:
                    center, rx, ry, phi, t0, dt = _arc_to_center(
                        cur, rx, ry, a[2], bool(a[3]), bool(a[4]), p
                    )
                    pts = _ellipse_arc(center, rx, ry, phi, t0, dt, transform, tol)
                    verts.extend(pts[1:-1])
                    emit(p)
                prev_ctrl = None
            cur = p
            prev_kind = up
    flush(False)
    return subpaths


# ---------------------------------------------------------------- documents


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1] if isinstance(tag, str) else ""


def _length(el: ET.Element, name: str, default: float = 0.0) -> float:
    raw = el.get(name)
    if raw is None:
        return default
    m = _NUMBER_RE.match(raw.strip().split()[0] if raw.strip() else "")
    if not m:
        raise MalformedDocument(f"bad length {name}={raw!r}")
    return float(m.group(0))


def _points(raw: str | None) -> list[Point]:
    nums = [float(v) for v in _NUMBER_RE.findall(raw or "")]
    if len(nums) % 2:
        nums = nums[:-1]
    return list(zip(nums[::2], nums[1::2]))


class _Shape(NamedTuple):
    """A shape awaiting flattening (tolerance depends on global bounds)."""

    tag: str
    el: ET.Element
    m: Affine
    hull: list[Point]


def _collect(root: ET.Element) -> tuple[list[_Shape], int]:
    shapes: list[_Shape] = []
    foreign = 0

    def walk(el: ET.Element, m: Affine) -> None:
        nonlocal foreign
        for child in el:
            tag = _local(child.tag)
            if not tag:
                continue
            cm = compose(m, parse_transform(child.get("transform")))
            if tag in _CONTAINERS:
                if tag == "svg":
                    cm = compose(cm, (1, 0, 0, 1, _length(child, "x"), _length(child, "y")))
                walk(child, cm)
            elif tag in _SHAPES:
                hull = _control_hull(tag, child)
                shapes.append(_Shape(tag, child, cm, [apply(cm, p) for p in hull]))
            elif tag not in _IGNORED:
                foreign += 1

    if _local(root.tag) != "svg":
        raise MalformedDocument(f"root element is {_local(root.tag)!r}, expected 'svg'")
    walk(root, parse_transform(root.get("transform")))
    return shapes, foreign


def _control_hull(tag: str, el: ET.Element) -> list[Point]:
    """Points roughly bounding the shape; only used to size the default tolerance."""
    if tag == "circle":
        cx, cy, r = _length(el, "cx"), _length(el, "cy"), _length(el, "r")
        return [(cx - r, cy - r), (cx + r, cy - r), (cx + r, cy + r), (cx - r, cy + r)]
    if tag == "ellipse":
        cx, cy = _length(el, "cx"), _length(el, "cy")
        rx, ry = _length(el, "rx"), _length(el, "ry")
        return [(cx - rx, cy - ry), (cx + rx, cy - ry), (cx + rx, cy + ry), (cx - rx, cy + ry)]
    if tag == "rect":
        x, y = _length(el, "x"), _length(el, "y")
        w, h = _length(el, "width"), _length(el, "height")
        return [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
    if tag == "line":
        return [(_length(el, "x1"), _length(el, "y1")), (_length(el, "x2"), _length(el, "y2"))]
    if tag in ("polyline", "polygon"):
        return _points(el.get("points"))
    if tag == "text":
        return [(_length(el, "x"), _length(el, "y"))]
    # path: a coarse flattening is enough to bound the drawing
    subs = flatten_path(el.get("d") or "", 1e9)
    return [p for s in subs for p in s.vertices]


def _closed(verts: list[Point]) -> tuple[Point, ...] | None:
    distinct = []
    for p in verts:
        if not distinct or p != distinct[-1]:
            distinct.append(p)
    if len(distinct) > 1 and distinct[0] == distinct[-1]:
        distinct.pop()
    if len(set(distinct)) < 3:
        return None
    return tuple(distinct) + (distinct[0],)


def _flatten_shape(shape: _Shape, tol: float) -> list[tuple[PrimitiveKind, tuple[Point, ...], str | None]]:
    tag, el, m = shape.tag, shape.el, shape.m
    out: list[tuple[PrimitiveKind, tuple[Point, ...], str | None]] = []

    def add_poly(verts: list[Point], closed: bool) -> None:
        if closed:
            ring = _closed(verts)
            if ring is not None:
                out.append((PrimitiveKind.CLOSED_CURVE, ring, None))
                return
            verts = list(dict.fromkeys(verts))
        if len(verts) >= 2:
            out.append((PrimitiveKind.OPEN_POLYLINE, tuple(verts), None))

    if tag in ("circle", "ellipse"):
        cx, cy = _length(el, "cx"), _length(el, "cy")
        if tag == "circle":
            rx = ry = _length(el, "r")
        else:
            rx, ry = _length(el, "rx"), _length(el, "ry")
        if rx > 0 and ry > 0:
            pts = _ellipse_arc((cx, cy), rx, ry, 0.0, 0.0, 2 * math.pi, m, tol, full=True)
            add_poly(pts[:-1], True)
    elif tag == "rect":
        x, y = _length(el, "x"), _length(el, "y")
        w, h = _length(el, "width"), _length(el, "height")
        if w > 0 and h > 0:
            corners = [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
            add_poly([apply(m, p) for p in corners], True)
    elif tag == "line":
        p = apply(m, (_length(el, "x1"), _length(el, "y1")))
        q = apply(m, (_length(el, "x2"), _length(el, "y2")))
        out.append((PrimitiveKind.SEGMENT, (p, q), None))
    elif tag in ("polyline", "polygon"):
        pts = [apply(m, p) for p in _points(el.get("points"))]
        add_poly(pts, tag == "polygon")
    elif tag == "path":
        for sub in flatten_path(el.get("d") or "", tol, m):
            add_poly(sub.vertices, sub.closed)
    elif tag == "text":
        anchor = apply(m, (_length(el, "x"), _length(el, "y")))
        out.append((PrimitiveKind.TEXT_MARK, (anchor,), "".join(el.itertext())))
    return out


def _bounds(points: list[Point]) -> tuple[float, float, float, float]:
    if not points:
        return (0.0, 0.0, 0.0, 0.0)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return (min(xs), min(ys), max(xs), max(ys))


def parse_drawing(document_text: str, flatten_tolerance: float | None = None) -> Scene:
    """Parse a vector clock drawing into a :class:`Scene`.

    When ``flatten_tolerance`` is omitted it defaults to 0.5% of the larger
    dimension of the drawing's bounding box.
    """
    if flatten_tolerance is not None and flatten_tolerance <= 0:
        raise ValueError("flatten_tolerance must be positive")
    try:
        root = ET.fromstring(document_text)
    except ET.ParseError as exc:
        raise MalformedDocument(str(exc)) from exc
    shapes, foreign = _collect(root)
    if flatten_tolerance is None:
        x0, y0, x1, y1 = _bounds([p for s in shapes for p in s.hull])
        span = max(x1 - x0, y1 - y0)
        flatten_tolerance = DEFAULT_TOLERANCE_FRACTION * span if span > 0 else 1.0
    prims: list[Primitive] = []
    for shape in shapes:
        pieces = _flatten_shape(shape, flatten_tolerance)
        if not pieces:
            foreign += 1
        for kind, verts, text in pieces:
            prims.append(Primitive(kind, verts, len(prims), text))
    if not prims and not foreign:
        raise EmptyDrawing("document contains no drawable elements")
    bounds = _bounds([v for p in prims for v in p.vertices])
    return Scene(tuple(prims), foreign, bounds)
