"""Planar geometry for oriented quadrilateral boxes.

Coordinates follow the image convention: y grows downward.  "Clockwise"
always means clockwise as rendered on screen, which in raw (x, y) numbers
corresponds to a positive signed shoelace sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Tuple


class GeometryError(ValueError):
    """Raised for non-finite or otherwise unusable geometric input."""


class Point(NamedTuple):
    x: float
    y: float


# Vertices closer than this are merged when building intersection polygons.
DEDUPE_TOL = 1e-9


@dataclass(frozen=True)
class QuadBox:
    """Oriented quadrilateral in canonical form.

    Vertices run clockwise (screen orientation, y-down) starting at the
    vertex with the smallest y; ties on y break toward the smallest x.
    Construct via :func:`canonicalize` rather than directly.
    """

    vertices: Tuple[Point, Point, Point, Point]

    @property
    def area(self) -> float:
        return shoelace_area(self.vertices)

    def flat(self) -> Tuple[float, ...]:
        """Coordinates as (x1, y1, x2, y2, x3, y3, x4, y4)."""
        return tuple(c for p in self.vertices for c in (p.x, p.y))


def canonicalize(vertices: Iterable[Sequence[float]]) -> QuadBox:
    """Reorder 4 vertices into canonical clockwise form.

    The input may be in any cyclic rotation or winding; self-intersecting
    ("bowtie") orderings are repaired by sorting around the centroid.
    """
    pts = []
    for v in vertices:
        x, y = float(v[0]), float(v[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise GeometryError(f"non-finite vertex ({x}, {y})")
        pts.append(Point(x, y))
    if len(pts) != 4:
        raise GeometryError(f"expected 4 vertices, got {len(pts)}")

    cx = sum(p.x for p in pts) / 4.0
    cy = sum(p.y for p in pts) / 4.0

    # Ascending atan2 in a y-down frame walks clockwise on screen.  The
    # remaining terms break degenerate ties by value, never by input
    # position, so the result is independent of the input ordering.
    def angle_key(p: Point):
        dx, dy = p.x - cx, p.y - cy
        return (math.atan2(dy, dx), dx * dx + dy * dy, p.y, p.x)

    ring = sorted(pts, key=angle_key)
    start = min(range(4), key=lambda i: (ring[i].y, ring[i].x))
    ring = ring[start:] + ring[:start]
    return QuadBox((ring[0], ring[1], ring[2], ring[3]))


def shoelace_area(polygon) -> float:
    """Non-negative area of a simple polygon (QuadBox or point sequence)."""
    pts = polygon.vertices if isinstance(polygon, QuadBox) else tuple(polygon)
    n = len(pts)
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def _check_convex(pts: Sequence[Point]) -> None:
    """Require consistent (non-negative, screen-clockwise) turning."""
    n = len(pts)
    scale = max(abs(c) for p in pts for c in p) + 1.0
    tol = 1e-9 * scale * scale
    for i in range(n):
        o = pts[i]
        a = pts[(i + 1) % n]
        b = pts[(i + 2) % n]
        cross = (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
        if cross < -tol:
            raise GeometryError("polygon is not convex in canonical winding")


def convex_intersection(a: QuadBox, b: QuadBox) -> Tuple[Point, ...]:
    """Intersection polygon of two convex quads; () when disjoint.

    Successive half-plane clipping of ``a`` by each edge of ``b``; exact
    for convex inputs.  Raises GeometryError on non-convex input.
    """
    pa = list(a.vertices)
    pb = list(b.vertices)
    _check_convex(pa)
    _check_convex(pb)

    output = pa
    for i in range(len(pb)):
        if not output:
            break
        c1 = pb[i]
        c2 = pb[(i + 1) % len(pb)]
        ex, ey = c2.x - c1.x, c2.y - c1.y

        def side(p: Point) -> float:
            return ex * (p.y - c1.y) - ey * (p.x - c1.x)

        clipped: list[Point] = []
        s = output[-1]
        s_side = side(s)
        for e in output:
            e_side = side(e)
            if e_side >= 0.0:
                if s_side < 0.0:
                    clipped.append(_segment_line_intersection(s, e, c1, c2))
                clipped.append(e)
            elif s_side >= 0.0:
                clipped.append(_segment_line_intersection(s, e, c1, c2))
            s, s_side = e, e_side
        output = clipped

    output = _dedupe_ring(output)
    if len(output) < 3:
        return ()
    return tuple(output)


def _segment_line_intersection(s: Point, e: Point, c1: Point, c2: Point) -> Point:
    dc = (c1.x - c2.x, c1.y - c2.y)
    dp = (s.x - e.x, s.y - e.y)
    n1 = c1.x * c2.y - c1.y * c2.x
    n2 = s.x * e.y - s.y * e.x
    denom = dc[0] * dp[1] - dc[1] * dp[0]
    if denom == 0.0:
        # Parallel within float precision; either endpoint lies on the line.
        return e
    inv = 1.0 / denom
    return Point((n1 * dp[0] - n2 * dc[0]) * inv, (n1 * dp[1] - n2 * dc[1]) * inv)


def _dedupe_ring(pts: Sequence[Point]) -> list[Point]:
    out: list[Point] = []
    for p in pts:
        if out and abs(p.x - out[-1].x) <= DEDUPE_TOL and abs(p.y - out[-1].y) <= DEDUPE_TOL:
            continue
        out.append(p)
    while len(out) > 1 and abs(out[0].x - out[-1].x) <= DEDUPE_TOL and abs(out[0].y - out[-1].y) <= DEDUPE_TOL:
        out.pop()
    return out


def iou(a: QuadBox, b: QuadBox) -> float:
    """Intersection-over-union of two canonical boxes, in [0, 1].

    Degenerate (zero-area) boxes score 0 against everything so that
    evaluation stays total.
    """
    # Clip in a fixed argument order so iou(a, b) == iou(b, a) exactly.
    if b.flat() < a.flat():
        a, b = b, a
    area_a = a.area
    area_b = b.area
    if area_a <= 0.0 or area_b <= 0.0:
        return 0.0
    inter_poly = convex_intersection(a, b)
    inter = shoelace_area(inter_poly) if inter_poly else 0.0
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)
