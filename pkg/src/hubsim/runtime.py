"""Runtime geometry: the mutable view of a site during a simulation run.

The static site is parsed once; this layer owns everything that can change
while the world runs (obstacle displacement animations, guide-strip
extensions) plus the derived structures agents navigate by: the walk grid
with a dynamic blocked-cell set, per-lane arc tables with resolved signal
stop lines, and tram track arc tables. Routing results are cached per goal
and invalidated whenever walkability changes (the `version` counter).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

from . import geometry as geo
from .errors import DanglingReference, GeometryError
from .sitemodel import (
    GRID_PITCH,
    NavGraph,
    SiteMap,
    _connector_anchor,
    build_walk_graph,
    shortest_path,
)


@dataclass(frozen=True)
class LaneRuntime:
    id: str
    level: int
    vertices: tuple[tuple[float, float], ...]
    arcs: tuple[float, ...]
    length: float
    speed_limit: float
    adjacent_lane_id: Optional[str]
    successor_id: Optional[str]
    stop_lines: tuple[tuple[float, str], ...]  # (arc s, signal_head id), ascending s


@dataclass(frozen=True)
class TrackRuntime:
    id: str
    level: int
    vertices: tuple[tuple[float, float], ...]
    arcs: tuple[float, ...]
    length: float


@dataclass
class ClearAnimation:
    obstacle_ids: tuple[str, ...]
    displacements: tuple[tuple[float, float], ...]
    start_tick: int
    duration_ticks: int
    done: bool = False


class RuntimeGeometry:
    """Site-derived navigable geometry with run-time mutations applied."""

    def __init__(self, site: SiteMap):
        self.site = site
        # base grid is rasterized without obstacles; obstacles only block
        # cells through the dynamic set below, so clearing them never needs
        # a full re-raster
        self.walk_graph: NavGraph = build_walk_graph(site, include_obstacles=False)
        self.version = 0
        self.obstacle_offsets: dict[str, tuple[float, float]] = {
            f.id: (0.0, 0.0) for f in site.by_kind("obstacle")
        }
        self.animations: list[ClearAnimation] = []
        # runtime guide-strip centerlines: feature id -> list of polylines,
        # index 0 is the authored centerline, later entries are appended
        self.strip_segments: dict[str, list[tuple[tuple[float, float], ...]]] = {
            f.id: [f.vertices] for f in site.by_kind("guide_strip")
        }
        self._nonop_connectors = frozenset(
            f.id for f in site.by_kind("connector") if not f.props.get("operational", False)
        )
        self._lanes = self._build_lanes(site)
        self._tracks = {
            f.id: TrackRuntime(
                id=f.id,
                level=f.level,
                vertices=f.vertices,
                arcs=tuple(geo.polyline_arcs(f.vertices)),
                length=geo.polyline_length(f.vertices),
            )
            for f in site.by_kind("tram_track")
        }
        self._walk_polys: dict[int, list[tuple[tuple[float, float], ...]]] = {}
        self._avatar_polys: dict[int, list[tuple[tuple[float, float], ...]]] = {}
        for lv in site.levels:
            walkable = [
                f.vertices
                for f in site.features
                if f.level == lv and f.kind in ("walk_surface", "crossing")
            ]
            self._walk_polys[lv] = walkable
            conns = [
                f.vertices
                for f in site.by_kind("connector")
                if lv in tuple(f.props["connects"])
            ]
            self._avatar_polys[lv] = walkable + conns
        self._obstacles_by_level: dict[int, list] = {}
        for f in site.by_kind("obstacle"):
            self._obstacles_by_level.setdefault(f.level, []).append(f)
        self.blocked_nodes: frozenset[int] = frozenset()
        self._sssp_cache: dict[int, tuple[int, list[float], list[int]]] = {}
        self._tour_cache: dict[int, tuple[int, list[float]]] = {}
        self._reblock()

    # --- construction helpers ----------------------------------------------

    @staticmethod
    def _build_lanes(site: SiteMap) -> dict[str, LaneRuntime]:
        heads_by_lane: dict[str, list[tuple[float, str]]] = {}
        for head in site.by_kind("signal_head"):
            lane_id = head.props.get("lane_id")
            if lane_id is None:
                continue
            lane = site.feature(lane_id)
            s, off = geo.project_point_to_polyline(head.vertices[0], lane.vertices)
            heads_by_lane.setdefault(lane_id, []).append((s, head.id))
        lanes = {}
        for f in site.by_kind("road_lane"):
            lanes[f.id] = LaneRuntime(
                id=f.id,
                level=f.level,
                vertices=f.vertices,
                arcs=tuple(geo.polyline_arcs(f.vertices)),
                length=geo.polyline_length(f.vertices),
                speed_limit=float(f.props.get("speed_limit", 13.9)),
                adjacent_lane_id=f.props.get("adjacent_lane_id"),
                successor_id=f.props.get("next_lane_id"),
                stop_lines=tuple(sorted(heads_by_lane.get(f.id, []))),
            )
        return lanes

    # --- lanes and tracks ----------------------------------------------

    def lane(self, lane_id: str) -> LaneRuntime:
        try:
            return self._lanes[lane_id]
        except KeyError:
            raise DanglingReference(f"no road lane {lane_id!r}") from None

    def lane_successor(self, lane_id: str) -> Optional[str]:
        return self.lane(lane_id).successor_id

    def lanes(self) -> list[LaneRuntime]:
        return [self._lanes[k] for k in sorted(self._lanes)]

    def track(self, track_id: str) -> TrackRuntime:
        try:
            return self._tracks[track_id]
        except KeyError:
            raise DanglingReference(f"no tram track {track_id!r}") from None

    def track_for_line(self, line) -> str:
        """The track all of a line's stops lie along; tracks tried id-sorted."""
        for tid in sorted(self._tracks):
            tr = self._tracks[tid]
            ok = True
            for stop_id in line.stops:
                stop = self.site.feature(stop_id)
                if stop.level != tr.level:
                    ok = False
                    break
                c = geo.polygon_centroid(stop.vertices)
                _, off = geo.project_point_to_polyline(c, tr.vertices)
                if off > 5.0:
                    ok = False
                    break
            if ok:
                return tid
        raise GeometryError(f"no tram track serves every stop of line {line.id!r}")

    def stop_arc(self, track_id: str, stop_id: str) -> float:
        tr = self.track(track_id)
        c = geo.polygon_centroid(self.site.feature(stop_id).vertices)
        s, _ = geo.project_point_to_polyline(c, tr.vertices)
        return s

    def track_length(self, track_id: str) -> float:
        return self.track(track_id).length

    def track_level(self, track_id: str) -> int:
        return self.track(track_id).level

    def track_point(self, track_id: str, s: float) -> tuple[float, float]:
        tr = self.track(track_id)
        return geo.point_at_arc(tr.vertices, tr.arcs, s)

    # --- dynamic obstacles ----------------------------------------------

    def obstacle_polygon(self, fid: str) -> tuple[tuple[float, float], ...]:
        """Footprint with the current runtime offset applied."""
        f = self.site.feature(fid)
        dx, dy = self.obstacle_offsets[fid]
        if dx == 0.0 and dy == 0.0:
            return f.vertices
        return tuple((x + dx, y + dy) for x, y in f.vertices)

    def start_clear_animation(
        self,
        obstacle_ids: tuple[str, ...],
        displacements: tuple[tuple[float, float], ...],
        start_tick: int,
        duration_ticks: int,
    ) -> None:
        self.animations.append(
            ClearAnimation(obstacle_ids, displacements, start_tick, max(1, duration_ticks))
        )

    def advance_animations(self, tick: int) -> None:
        """Move animated obstacles; on completion the blocked set is rebuilt."""
        changed = False
        for anim in self.animations:
            if anim.done:
                continue
            k = tick - anim.start_tick
            if k <= 0:
                continue
            frac = min(1.0, k / anim.duration_ticks)
            for fid, (dx, dy) in zip(anim.obstacle_ids, anim.displacements):
                self.obstacle_offsets[fid] = (dx * frac, dy * frac)
            if k >= anim.duration_ticks:
                anim.done = True
                changed = True
        if changed:
            self._reblock()

    def _reblock(self) -> None:
        """Recompute which walk nodes current obstacle footprints cover."""
        blocked: set[int] = set()
        cell_index: dict = self.walk_graph.meta["cell_index"]
        pitch = GRID_PITCH
        for lv, obstacles in self._obstacles_by_level.items():
            for f in obstacles:
                poly = self.obstacle_polygon(f.id)
                x0, y0, x1, y1 = geo.polygon_bbox(poly)
                for i in range(int(x0 / pitch) - 1, int(x1 / pitch) + 2):
                    for j in range(int(y0 / pitch) - 1, int(y1 / pitch) + 2):
                        nid = cell_index.get((lv, i, j))
                        if nid is None or nid in blocked:
                            continue
                        if geo.point_in_polygon(self.walk_graph.nodes[nid][1], poly):
                            blocked.add(nid)
        self.blocked_nodes = frozenset(blocked)
        self.version += 1
        self._sssp_cache.clear()
        self._tour_cache.clear()

    # --- guide strips ----------------------------------------------

    def append_strip_segment(
        self, strip_id: str, polyline: tuple[tuple[float, float], ...]
    ) -> None:
        if strip_id not in self.strip_segments:
            raise DanglingReference(f"no guide strip {strip_id!r}")
        self.strip_segments[strip_id].append(polyline)
        # strips lie on already-walkable surface; the raster is unaffected,
        # but route caches are tied to the version so bump it anyway
        self.version += 1
        self._sssp_cache.clear()
        self._tour_cache.clear()

    def strip_centerline(self, strip_id: str) -> list[tuple[tuple[float, float], ...]]:
        return list(self.strip_segments[strip_id])

    # --- walkability queries ----------------------------------------------

    def walkable_point(self, level: int, pos: tuple[float, float]) -> bool:
        """Pedestrian walkability, at walk-grid resolution.

        Pedestrians route over the grid, so the grid is also their ground
        truth for standing room; the O(1) cell lookup keeps the per-tick
        cost flat. The avatar gets the exact polygon test instead.
        """
        cell_index = self.walk_graph.meta["cell_index"]
        nid = cell_index.get(
            (level, int(pos[0] / GRID_PITCH), int(pos[1] / GRID_PITCH))
        )
        return nid is not None and nid not in self.blocked_nodes

    def avatar_walkable(self, level: int, pos: tuple[float, float], clearance: float) -> bool:
        """Avatar walkability: surfaces plus connector floors, obstacle clearance."""
        for poly in self._avatar_polys.get(level, []):
            if geo.point_in_polygon(pos, poly):
                break
        else:
            return False
        for f in self._obstacles_by_level.get(level, []):
            poly = self.obstacle_polygon(f.id)
            if geo.point_in_polygon(pos, poly):
                return False
            if geo.dist_point_polygon(pos, poly) < clearance:
                return False
        return True

    # --- connectors ----------------------------------------------

    def connector_operational(self, fid: str) -> bool:
        return fid not in self._nonop_connectors

    def nonoperational_connectors(self) -> frozenset[str]:
        return self._nonop_connectors

    def connectors_touching(self, level: int) -> list:
        return [
            f
            for f in self.site.by_kind("connector")
            if level in tuple(f.props["connects"])
        ]

    def connector_exit(self, fid: str, from_level: int) -> tuple[int, tuple[float, float]]:
        """(other level, exit anchor position) for a traversal from from_level."""
        conn = self.site.feature(fid)
        la, lb = conn.props["connects"]
        to_level = lb if from_level == la else la
        anchor = _connector_anchor(conn)[to_level]
        return to_level, anchor

    def connector_node(self, fid: str, level: int) -> int:
        return self.walk_graph.meta["connector_nodes"][fid][level]

    # --- routing ----------------------------------------------

    def nearest_runtime_node(
        self, level: int, pos: tuple[float, float], max_radius: float = 6.0
    ) -> Optional[int]:
        """Closest unblocked walk node, ring-searched on the grid."""
        cell_index: dict = self.walk_graph.meta["cell_index"]
        nodes = self.walk_graph.nodes
        pitch = GRID_PITCH
        ci = int(pos[0] / pitch)
        cj = int(pos[1] / pitch)
        for r in range(int(max_radius / pitch) + 1):
            best = None
            best_d = math.inf
            for i in range(ci - r, ci + r + 1):
                for j in range(cj - r, cj + r + 1):
                    if max(abs(i - ci), abs(j - cj)) != r:
                        continue
                    nid = cell_index.get((level, i, j))
                    if nid is None or nid in self.blocked_nodes:
                        continue
                    d = geo.dist(nodes[nid][1], pos)
                    if d < best_d:
                        best_d = d
                        best = nid
            if best is not None:
                return best
        return None

    def _sssp(self, goal: int) -> tuple[list[float], list[int]]:
        """Pedestrian distances to goal + next-hop table, current blocked set.

        Pedestrian routes never use connector edges: agents stay on their
        own level; only the avatar rides elevators and stairs.
        """
        cached = self._sssp_cache.get(goal)
        if cached is not None and cached[0] == self.version:
            return cached[1], cached[2]
        n = len(self.walk_graph.nodes)
        dist = [math.inf] * n
        nxt = [-1] * n
        blocked = self.blocked_nodes
        if goal not in blocked:
            dist[goal] = 0.0
            radj = self.walk_graph.reverse_adjacency()
            pq = [(0.0, goal)]
            while pq:
                d, x = heapq.heappop(pq)
                if d > dist[x]:
                    continue
                for a, length, conn in radj[x]:
                    if conn is not None or a in blocked:
                        continue
                    nd = d + length
                    if nd < dist[a]:
                        dist[a] = nd
                        nxt[a] = x
                        heapq.heappush(pq, (nd, a))
        self._sssp_cache[goal] = (self.version, dist, nxt)
        return dist, nxt

    def walk_route(self, start: int, goal: int) -> Optional[list[int]]:
        """Walk-grid node path from start to goal, or None when unreachable."""
        dist, nxt = self._sssp(goal)
        if math.isinf(dist[start]):
            return None
        route = [start]
        x = start
        while x != goal:
            x = nxt[x]
            route.append(x)
        return route

    def _tour_dist(self, target: int) -> list[float]:
        """Distances to a tour target for every node, avatar routing rules.

        Operational connector edges are allowed, non-operational ones and
        blocked nodes are not. Cached per (target, version) so the per-tick
        guided-path recompute is a cheap greedy table walk.
        """
        cached = self._tour_cache.get(target)
        if cached is not None and cached[0] == self.version:
            return cached[1]
        n = len(self.walk_graph.nodes)
        dist = [math.inf] * n
        blocked = self.blocked_nodes
        nonop = self._nonop_connectors
        if target not in blocked:
            dist[target] = 0.0
            radj = self.walk_graph.reverse_adjacency()
            pq = [(0.0, target)]
            while pq:
                d, x = heapq.heappop(pq)
                if d > dist[x]:
                    continue
                for a, length, conn in radj[x]:
                    if a in blocked or (conn is not None and conn in nonop):
                        continue
                    nd = d + length
                    if nd < dist[a]:
                        dist[a] = nd
                        heapq.heappush(pq, (nd, a))
        self._tour_cache[target] = (self.version, dist)
        return dist

    def guided_route(
        self, level: int, pos: tuple[float, float], target_node: int
    ) -> Optional[list[int]]:
        """Shortest-path node list for the tour's ground polyline.

        Same tie-breaking as the canonical shortest_path (lexicographically
        smallest node sequence among equal-length paths): the greedy walk
        below scans successors in ascending node id and follows the first
        one on a shortest path, which is exactly what shortest_path does.
        """
        start = self.nearest_runtime_node(level, pos)
        if start is None:
            return None
        dist = self._tour_dist(target_node)
        if math.isinf(dist[start]):
            return None
        adj = self.walk_graph.adjacency()
        nonop = self._nonop_connectors
        route = [start]
        x = start
        while x != target_node:
            for v, length, conn in adj[x]:
                if conn is not None and conn in nonop:
                    continue
                if dist[x] == length + dist[v]:
                    x = v
                    break
            else:  # float ties broke unevenly; fall back to the exact walk
                p = shortest_path(
                    self.walk_graph,
                    start,
                    target_node,
                    exclude=self._nonop_connectors,
                    blocked_nodes=self.blocked_nodes,
                )
                return list(p.nodes) if p is not None else None
            route.append(x)
        return route

    def node_polyline(
        self, nodes: list[int]
    ) -> list[tuple[int, tuple[float, float]]]:
        """(level, position) chain for rendering a node path on the ground."""
        g = self.walk_graph.nodes
        return [(g[n][0], g[n][1]) for n in nodes]
