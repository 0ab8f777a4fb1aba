"""Geometry helpers against independent oracles (matplotlib.path, brute force)."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from matplotlib.path import Path as MplPath

from hubsim import geometry as geo

coord = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False, width=32)
point = st.tuples(coord, coord)


def convex_polygon(n: int, cx: float, cy: float, r: float) -> list[tuple[float, float]]:
    return [
        (cx + r * math.cos(2 * math.pi * k / n), cy + r * math.sin(2 * math.pi * k / n))
        for k in range(n)
    ]


class TestPointInPolygon:
    @given(
        pt=point,
        n=st.integers(min_value=3, max_value=9),
        cx=st.floats(min_value=-10, max_value=10),
        cy=st.floats(min_value=-10, max_value=10),
        r=st.floats(min_value=0.5, max_value=20),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_matplotlib_on_convex(self, pt, n, cx, cy, r):
        poly = convex_polygon(n, cx, cy, r)
        # skip points within 1e-6 of an edge; boundary convention may differ
        if geo.dist_point_polygon(pt, poly) < 1e-6:
            return
        oracle = MplPath(poly).contains_point(pt)
        assert geo.point_in_polygon(pt, poly) == bool(oracle)

    def test_concave(self):
        # an L shape; the notch (upper-left quadrant) is outside
        poly = [(0, 0), (4, 0), (4, 4), (2, 4), (2, 2), (0, 2)]
        assert geo.point_in_polygon((1, 1), poly)
        assert geo.point_in_polygon((3, 3), poly)
        assert not geo.point_in_polygon((1, 3), poly)
        oracle = MplPath(poly)
        for pt in [(1, 1), (3, 1), (3, 3), (1, 3), (1.5, 1.9), (2.5, 2.5), (0.5, 3.9)]:
            assert geo.point_in_polygon(pt, poly) == oracle.contains_point(pt)

    def test_vectorized_matches_scalar(self):
        poly = [(0, 0), (10, 0), (10, 6), (5, 9), (0, 6)]
        xs, ys = np.meshgrid(np.linspace(-1, 11, 25), np.linspace(-1, 10, 23))
        mask = geo.points_in_polygon(xs, ys, poly)
        for i in range(xs.shape[0]):
            for j in range(xs.shape[1]):
                assert mask[i, j] == geo.point_in_polygon((xs[i, j], ys[i, j]), poly)


class TestSegments:
    def test_crossing(self):
        assert geo.segment_intersects((0, 0), (2, 2), (0, 2), (2, 0))

    def test_parallel_disjoint(self):
        assert not geo.segment_intersects((0, 0), (1, 0), (0, 1), (1, 1))

    def test_touching_endpoint(self):
        assert geo.segment_intersects((0, 0), (1, 1), (1, 1), (2, 0))

    def test_collinear_overlap(self):
        assert geo.segment_intersects((0, 0), (2, 0), (1, 0), (3, 0))

    def test_self_intersection_detection(self):
        bow = [(0, 0), (2, 2), (2, 0), (0, 2)]
        square = [(0, 0), (2, 0), (2, 2), (0, 2)]
        assert geo.polygon_self_intersects(bow)
        assert not geo.polygon_self_intersects(square)


class TestPolyline:
    def test_length_and_arcs(self):
        line = [(0, 0), (3, 0), (3, 4)]
        assert geo.polyline_length(line) == pytest.approx(7.0)
        assert geo.polyline_arcs(line) == pytest.approx([0.0, 3.0, 7.0])

    @given(s=st.floats(min_value=0, max_value=7))
    @settings(max_examples=60, deadline=None)
    def test_point_at_arc_roundtrip(self, s):
        line = [(0.0, 0.0), (3.0, 0.0), (3.0, 4.0)]
        arcs = geo.polyline_arcs(line)
        p = geo.point_at_arc(line, arcs, s)
        s2, off = geo.project_point_to_polyline(p, line)
        assert s2 == pytest.approx(s, abs=1e-9)
        assert off == pytest.approx(0.0, abs=1e-9)

    def test_point_at_arc_clamps(self):
        line = [(0.0, 0.0), (3.0, 0.0)]
        arcs = geo.polyline_arcs(line)
        assert geo.point_at_arc(line, arcs, -5.0) == pytest.approx((0.0, 0.0))
        assert geo.point_at_arc(line, arcs, 99.0) == pytest.approx((3.0, 0.0))

    def test_projection_offset_sign_independent_distance(self):
        line = [(0.0, 0.0), (10.0, 0.0)]
        s, off = geo.project_point_to_polyline((4.0, 2.5), line)
        assert s == pytest.approx(4.0)
        assert abs(off) == pytest.approx(2.5)

    @given(p=point)
    @settings(max_examples=100, deadline=None)
    def test_dist_point_segment_brute(self, p):
        a, b = (1.0, 1.0), (7.0, 4.0)
        brute = min(
            math.dist(p, (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
            for t in [k / 2000 for k in range(2001)]
        )
        assert geo.dist_point_segment(p, a, b) <= brute + 1e-6
        assert geo.dist_point_segment(p, a, b) >= brute - 1e-3


class TestPolygonMetrics:
    def test_centroid_square(self):
        assert geo.polygon_centroid([(0, 0), (2, 0), (2, 2), (0, 2)]) == pytest.approx(
            (1.0, 1.0)
        )

    def test_centroid_degenerate_falls_back_to_mean(self):
        pts = [(0, 0), (1, 1), (2, 2)]
        c = geo.polygon_centroid(pts)
        assert c == pytest.approx((1.0, 1.0))

    def test_bbox(self):
        assert geo.polygon_bbox([(1, 5), (4, 2), (3, 9)]) == (1, 2, 4, 9)

    def test_polyline_intersects_polygon(self):
        poly = [(2, 2), (6, 2), (6, 6), (2, 6)]
        assert geo.polyline_intersects_polygon([(0, 4), (8, 4)], poly)
        assert geo.polyline_intersects_polygon([(3, 3), (4, 4)], poly)  # inside
        assert not geo.polyline_intersects_polygon([(0, 0), (1, 1)], poly)


class TestVectors:
    def test_normalize_zero_is_zero(self):
        assert geo.normalize((0.0, 0.0)) == (0.0, 0.0)

    @given(v=point)
    @settings(max_examples=50, deadline=None)
    def test_normalize_unit(self, v):
        n = geo.normalize(v)
        if v != (0.0, 0.0) and geo.vec_len(v) > 1e-12:
            assert geo.vec_len(n) == pytest.approx(1.0, abs=1e-9)
