"""2D geometry helpers: points are (x, y) tuples in meters.

Polygons are vertex sequences without a repeated closing vertex; polylines
are ordered vertex sequences. Everything here is pure and allocation-light
because the world step calls into it every tick.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

Point = tuple[float, float]


def vec_sub(a: Point, b: Point) -> Point:
    return (a[0] - b[0], a[1] - b[1])


def vec_add(a: Point, b: Point) -> Point:
    return (a[0] + b[0], a[1] + b[1])


def vec_scale(a: Point, k: float) -> Point:
    return (a[0] * k, a[1] * k)


def vec_len(a: Point) -> float:
    return math.hypot(a[0], a[1])


def vec_dot(a: Point, b: Point) -> float:
    return a[0] * b[0] + a[1] * b[1]


def dist(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def normalize(a: Point) -> Point:
    n = math.hypot(a[0], a[1])
    if n == 0.0:
        return (0.0, 0.0)
    return (a[0] / n, a[1] / n)


def point_in_polygon(pt: Point, poly: Sequence[Point]) -> bool:
    """Even-odd ray cast. Boundary behavior is unspecified; callers keep
    query points off polygon edges (grid samples are offset for this)."""
    x, y = pt
    inside = False
    n = len(poly)
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        if (yi > y) != (yj > y):
            t = (y - yi) / (yj - yi)
            if x < xi + t * (xj - xi):
                inside = not inside
        j = i
    return inside


def points_in_polygon(xs: np.ndarray, ys: np.ndarray, poly: Sequence[Point]) -> np.ndarray:
    """Vectorized even-odd test for many points against one polygon."""
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(poly)
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        crosses = (yi > ys) != (yj > ys)
        if crosses.any():
            denom = yj - yi
            t = (ys - yi) / denom
            hit = crosses & (xs < xi + t * (xj - xi))
            inside ^= hit
        j = i
    return inside


def segment_intersects(p1: Point, p2: Point, p3: Point, p4: Point) -> bool:
    """Proper intersection of two open segments (collinear overlap counts)."""
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment(p3, p4, p1):
        return True
    if d2 == 0 and _on_segment(p3, p4, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, p3):
        return True
    if d4 == 0 and _on_segment(p1, p2, p4):
        return True
    return False


def _cross(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(
        a[1], b[1]
    )


def polygon_self_intersects(poly: Sequence[Point]) -> bool:
    """True if any two non-adjacent edges cross."""
    n = len(poly)
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex
            if segment_intersects(*edges[i], *edges[j]):
                return True
    return False


def polygon_centroid(poly: Sequence[Point]) -> Point:
    # Area-weighted centroid; falls back to vertex mean for degenerate area.
    a2 = 0.0
    cx = 0.0
    cy = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        w = x0 * y1 - x1 * y0
        a2 += w
        cx += (x0 + x1) * w
        cy += (y0 + y1) * w
    if abs(a2) < 1e-12:
        return (
            sum(p[0] for p in poly) / n,
            sum(p[1] for p in poly) / n,
        )
    return (cx / (3.0 * a2), cy / (3.0 * a2))


def polygon_bbox(poly: Sequence[Point]) -> tuple[float, float, float, float]:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return (min(xs), min(ys), max(xs), max(ys))


def dist_point_segment(p: Point, a: Point, b: Point) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx = bx - ax
    dy = by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / denom
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def dist_point_polygon(p: Point, poly: Sequence[Point]) -> float:
    """0 when inside, else distance to the nearest edge."""
    if point_in_polygon(p, poly):
        return 0.0
    n = len(poly)
    return min(dist_point_segment(p, poly[i], poly[(i + 1) % n]) for i in range(n))


def dist_point_polyline(p: Point, line: Sequence[Point]) -> float:
    return min(dist_point_segment(p, line[i], line[i + 1]) for i in range(len(line) - 1))


def polyline_length(line: Sequence[Point]) -> float:
    return sum(dist(line[i], line[i + 1]) for i in range(len(line) - 1))


def polyline_arcs(line: Sequence[Point]) -> list[float]:
    """Cumulative arc length at each vertex, starting at 0."""
    arcs = [0.0]
    for i in range(len(line) - 1):
        arcs.append(arcs[-1] + dist(line[i], line[i + 1]))
    return arcs


def point_at_arc(line: Sequence[Point], arcs: Sequence[float], s: float) -> Point:
    """Position at arc length s, clamped to the polyline ends."""
    if s <= 0.0:
        return line[0]
    if s >= arcs[-1]:
        return line[-1]
    # linear scan: polylines here have few vertices
    for i in range(len(arcs) - 1):
        if s <= arcs[i + 1]:
            seg = arcs[i + 1] - arcs[i]
            t = 0.0 if seg == 0.0 else (s - arcs[i]) / seg
            a, b = line[i], line[i + 1]
            return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    return line[-1]


def heading_at_arc(line: Sequence[Point], arcs: Sequence[float], s: float) -> Point:
    """Unit direction of the segment containing arc s."""
    for i in range(len(arcs) - 1):
        if s <= arcs[i + 1] or i == len(arcs) - 2:
            return normalize(vec_sub(line[i + 1], line[i]))
    return (0.0, 0.0)


def project_point_to_polyline(p: Point, line: Sequence[Point]) -> tuple[float, float]:
    """(arc length of closest point, distance to it)."""
    best_s = 0.0
    best_d = math.inf
    acc = 0.0
    for i in range(len(line) - 1):
        a, b = line[i], line[i + 1]
        seg = dist(a, b)
        dx, dy = b[0] - a[0], b[1] - a[1]
        denom = dx * dx + dy * dy
        if denom == 0.0:
            t = 0.0
        else:
            t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / denom
            t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        cx, cy = a[0] + t * dx, a[1] + t * dy
        d = math.hypot(p[0] - cx, p[1] - cy)
        if d < best_d:
            best_d = d
            best_s = acc + t * seg
        acc += seg
    return best_s, best_d


def polyline_intersects_polygon(line: Sequence[Point], poly: Sequence[Point]) -> bool:
    """True if the polyline touches the polygon (endpoint inside or edge cross)."""
    for v in line:
        if point_in_polygon(v, poly):
            return True
    n = len(poly)
    for i in range(len(line) - 1):
        for j in range(n):
            if segment_intersects(line[i], line[i + 1], poly[j], poly[(j + 1) % n]):
                return True
    return False


def mean_direction(line: Sequence[Point]) -> Point:
    """Unit vector from first to last vertex (coarse direction sense)."""
    return normalize(vec_sub(line[-1], line[0]))


def sample_polyline(line: Sequence[Point], step: float) -> Iterable[Point]:
    """Points along the polyline every `step` meters, endpoints included."""
    arcs = polyline_arcs(line)
    total = arcs[-1]
    s = 0.0
    while s < total:
        yield point_at_arc(line, arcs, s)
        s += step
    yield line[-1]
