"""Site description: parsing, validation, navigation graphs, shortest paths.

The site file is UTF-8 JSON (see docs/site-format.md). A SiteMap and the
NavGraphs built from it are immutable after construction and safe to share
across readers.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import geometry as geo
from .errors import DanglingReference, EmptyGraph, GeometryError, MalformedDocument, UnknownKind

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

FEATURE_KINDS = frozenset(
    {
        "walk_surface",
        "road_lane",
        "tram_track",
        "stop",
        "connector",
        "guide_strip",
        "obstacle",
        "signal_head",
        "spawn_point",
        "crossing",
    }
)

# Feature kinds whose area is walkable in walk mode.
WALKABLE_KINDS = ("walk_surface", "crossing")

GRID_PITCH = 0.5  # walk grid spacing, meters

# Connector traversal lengths stand in for vertical geometry.
CONNECTOR_LENGTH = {"elevator": 10.0, "stairs": 15.0}

_TOP_LEVEL_KEYS = {"format_version", "name", "bounds", "levels", "features"}


@dataclass(frozen=True)
class Geometry:
    type: str  # "polygon" | "polyline"
    vertices: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Feature:
    id: str
    level: int
    kind: str
    geometry: Geometry
    props: dict

    @property
    def vertices(self) -> tuple[tuple[float, float], ...]:
        return self.geometry.vertices


@dataclass(frozen=True)
class SiteMap:
    name: str
    format_version: int
    bounds: tuple[float, float]  # (w, h), origin at the south-west corner
    levels: tuple[int, ...]
    features: tuple[Feature, ...]

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {f.id: f for f in self.features})

    def feature(self, fid: str) -> Feature:
        try:
            return self._by_id[fid]  # type: ignore[attr-defined]
        except KeyError:
            raise DanglingReference(f"no feature with id {fid!r}") from None

    def has_feature(self, fid: str) -> bool:
        return fid in self._by_id  # type: ignore[attr-defined]

    def by_kind(self, kind: str, level: Optional[int] = None) -> list[Feature]:
        return [
            f
            for f in self.features
            if f.kind == kind and (level is None or f.level == level)
        ]

    def digest(self) -> str:
        return hashlib.sha256(serialize_site(self)).hexdigest()


@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # "error" | "warning"
    feature_id: str
    message: str


def _parse_geometry(fid: str, raw: dict, bounds: tuple[float, float]) -> Geometry:
    gtype = raw.get("type")
    if gtype not in ("polygon", "polyline"):
        raise GeometryError(f"feature {fid!r}: geometry type must be polygon or polyline")
    verts_raw = raw.get("vertices")
    if not isinstance(verts_raw, list):
        raise GeometryError(f"feature {fid!r}: geometry.vertices missing")
    try:
        verts = tuple((float(x), float(y)) for x, y in verts_raw)
    except (TypeError, ValueError) as exc:
        raise GeometryError(f"feature {fid!r}: bad vertex: {exc}") from exc
    minimum = 3 if gtype == "polygon" else 2
    if len(verts) < minimum:
        raise GeometryError(f"feature {fid!r}: {gtype} needs >= {minimum} vertices")
    w, h = bounds
    for x, y in verts:
        if not (0.0 <= x <= w and 0.0 <= y <= h):
            raise GeometryError(f"feature {fid!r}: vertex ({x}, {y}) outside bounds")
    if gtype == "polygon" and geo.polygon_self_intersects(verts):
        raise GeometryError(f"feature {fid!r}: polygon self-intersects")
    return Geometry(gtype, verts)


def load_site(raw: bytes) -> SiteMap:
    """Parse and validate a site document. Raises on any structural defect."""
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedDocument(f"not UTF-8: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be a JSON object")

    for key in doc:
        if key not in _TOP_LEVEL_KEYS:
            log.warning("site document: ignoring unknown top-level key %r", key)

    if doc.get("format_version") != FORMAT_VERSION:
        raise MalformedDocument(
            f"format_version must be {FORMAT_VERSION}, got {doc.get('format_version')!r}"
        )
    name = str(doc.get("name", ""))
    bounds_raw = doc.get("bounds")
    if not isinstance(bounds_raw, dict) or "w" not in bounds_raw or "h" not in bounds_raw:
        raise MalformedDocument("bounds must be an object with keys w and h")
    w, h = float(bounds_raw["w"]), float(bounds_raw["h"])
    if not (0.0 < w <= 1000.0 and 0.0 < h <= 1000.0):
        raise GeometryError(f"bounds {w}x{h} outside (0, 1000] meters")

    levels_raw = doc.get("levels")
    if not isinstance(levels_raw, list) or not levels_raw:
        raise MalformedDocument("levels must be a non-empty list of integers")
    levels = tuple(sorted(int(l) for l in levels_raw))
    level_set = set(levels)

    feats_raw = doc.get("features")
    if not isinstance(feats_raw, list):
        raise MalformedDocument("features must be a list")

    features: list[Feature] = []
    seen: set[str] = set()
    for fr in feats_raw:
        if not isinstance(fr, dict):
            raise MalformedDocument("feature entries must be objects")
        fid = fr.get("id")
        if not isinstance(fid, str) or not fid:
            raise MalformedDocument("every feature needs a non-empty string id")
        if fid in seen:
            raise MalformedDocument(f"duplicate feature id {fid!r}")
        seen.add(fid)
        kind = fr.get("kind")
        if kind not in FEATURE_KINDS:
            raise UnknownKind(f"feature {fid!r}: unknown kind {kind!r}")
        level = fr.get("level")
        if not isinstance(level, int) or level not in level_set:
            raise DanglingReference(f"feature {fid!r}: level {level!r} not declared")
        geom = _parse_geometry(fid, fr.get("geometry", {}), (w, h))
        props = fr.get("props", {})
        if not isinstance(props, dict):
            raise MalformedDocument(f"feature {fid!r}: props must be an object")
        features.append(Feature(id=fid, level=level, kind=kind, geometry=geom, props=dict(props)))

    site = SiteMap(
        name=name,
        format_version=FORMAT_VERSION,
        bounds=(w, h),
        levels=levels,
        features=tuple(features),
    )
    _check_references(site)
    return site


def _check_references(site: SiteMap) -> None:
    lanes = {f.id: f for f in site.features if f.kind == "road_lane"}
    for f in site.features:
        if f.kind == "road_lane":
            adj = f.props.get("adjacent_lane_id")
            if adj is not None:
                other = lanes.get(adj)
                if other is None:
                    raise DanglingReference(
                        f"lane {f.id!r}: adjacent_lane_id {adj!r} does not exist"
                    )
                if other.level != f.level:
                    raise DanglingReference(
                        f"lane {f.id!r}: adjacent lane {adj!r} is on a different level"
                    )
                d = geo.vec_dot(geo.mean_direction(f.vertices), geo.mean_direction(other.vertices))
                if d <= 0.0:
                    raise GeometryError(
                        f"lane {f.id!r}: adjacent lane {adj!r} runs the opposite way"
                    )
        elif f.kind == "connector":
            ckind = f.props.get("kind")
            if ckind not in CONNECTOR_LENGTH:
                raise MalformedDocument(f"connector {f.id!r}: kind must be elevator or stairs")
            connects = f.props.get("connects")
            if (
                not isinstance(connects, list)
                or len(connects) != 2
                or connects[0] == connects[1]
            ):
                raise MalformedDocument(
                    f"connector {f.id!r}: connects must name two distinct levels"
                )
            for lv in connects:
                if lv not in site.levels:
                    raise DanglingReference(f"connector {f.id!r}: level {lv!r} not declared")
            if f.geometry.type != "polygon":
                raise GeometryError(f"connector {f.id!r}: geometry must be a polygon")
            if "operational" not in f.props:
                raise MalformedDocument(f"connector {f.id!r}: missing operational flag")
        elif f.kind == "spawn_point":
            if f.props.get("agent_kind") not in ("vehicle", "pedestrian", "cyclist"):
                raise MalformedDocument(f"spawn_point {f.id!r}: bad agent_kind")
            if float(f.props.get("rate", -1.0)) < 0.0:
                raise MalformedDocument(f"spawn_point {f.id!r}: rate must be >= 0")
            lane_id = f.props.get("lane_id")
            if f.props.get("agent_kind") == "vehicle":
                if not lane_id or lane_id not in lanes:
                    raise DanglingReference(f"spawn_point {f.id!r}: lane_id missing or unknown")


def serialize_site(site: SiteMap) -> bytes:
    """Inverse of load_site; load_site(serialize_site(s)) preserves features."""
    doc = {
        "format_version": site.format_version,
        "name": site.name,
        "bounds": {"w": site.bounds[0], "h": site.bounds[1]},
        "levels": list(site.levels),
        "features": [
            {
                "id": f.id,
                "level": f.level,
                "kind": f.kind,
                "geometry": {"type": f.geometry.type, "vertices": [list(v) for v in f.vertices]},
                "props": f.props,
            }
            for f in site.features
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=False).encode("utf-8")


# --- cross-feature validation -------------------------------------------------


def validate_site(site: SiteMap) -> list[ValidationIssue]:
    """Cross-feature consistency report; empty iff the site is fully consistent."""
    issues: list[ValidationIssue] = []

    rails = [f for f in site.features if f.kind in ("tram_track", "road_lane")]
    for stop in site.by_kind("stop"):
        touched = False
        for rail in rails:
            if rail.level != stop.level:
                continue
            if stop.geometry.type == "polygon" and geo.polyline_intersects_polygon(
                rail.vertices, stop.vertices
            ):
                touched = True
                break
        if not touched:
            issues.append(
                ValidationIssue("error", stop.id, "stop does not intersect any track or lane")
            )

    # Level reachability from ground via connectors.
    reachable = {0}
    frontier = [0]
    conns = site.by_kind("connector")
    while frontier:
        lv = frontier.pop()
        for c in conns:
            a, b = c.props["connects"]
            for src, dst in ((a, b), (b, a)):
                if src == lv and dst not in reachable:
                    reachable.add(dst)
                    frontier.append(dst)
    populated = {f.level for f in site.features}
    for lv in sorted(populated):
        if lv not in reachable:
            issues.append(ValidationIssue("error", "", f"level {lv} unreachable from level 0"))

    # Guide strips must lie on walk surfaces, sampled finely.
    for strip in site.by_kind("guide_strip"):
        surfaces = [
            f.vertices
            for f in site.features
            if f.kind == "walk_surface" and f.level == strip.level
        ]
        for pt in geo.sample_polyline(strip.vertices, 0.25):
            if not any(geo.point_in_polygon(pt, poly) for poly in surfaces):
                issues.append(
                    ValidationIssue(
                        "error",
                        strip.id,
                        f"centerline point ({pt[0]:.2f}, {pt[1]:.2f}) off walk surface",
                    )
                )
                break

    for sp in site.by_kind("spawn_point"):
        for gid in sp.props.get("goal_ids", []):
            if not site.has_feature(str(gid)):
                issues.append(
                    ValidationIssue("error", sp.id, f"goal id {gid!r} does not exist")
                )

    return issues


# --- navigation graphs ---------------------------------------------------------


@dataclass
class NavGraph:
    """Immutable per-mode routing graph with dense integer node ids."""

    mode: str
    nodes: list[tuple[int, tuple[float, float]]]  # node id -> (level, position)
    edges: list[tuple[int, int, float, Optional[str]]]  # (from, to, length, connector id)
    built_from: str
    meta: dict = field(default_factory=dict)

    _adj: Optional[list[list[tuple[int, float, Optional[str]]]]] = None
    _radj: Optional[list[list[tuple[int, float, Optional[str]]]]] = None

    def adjacency(self) -> list[list[tuple[int, float, Optional[str]]]]:
        if self._adj is None:
            adj: list[list[tuple[int, float, Optional[str]]]] = [[] for _ in self.nodes]
            for a, b, length, conn in self.edges:
                adj[a].append((b, length, conn))
            for row in adj:
                row.sort()
            self._adj = adj
        return self._adj

    def reverse_adjacency(self) -> list[list[tuple[int, float, Optional[str]]]]:
        if self._radj is None:
            radj: list[list[tuple[int, float, Optional[str]]]] = [[] for _ in self.nodes]
            for a, b, length, conn in self.edges:
                radj[b].append((a, length, conn))
            self._radj = radj
        return self._radj


def walk_cells(
    site: SiteMap, level: int, include_obstacles: bool = True
) -> dict[tuple[int, int], tuple[float, float]]:
    """Walkable grid cells of one level: (i, j) -> center position.

    A cell is walkable when its center lies in a walkable polygon and, if
    include_obstacles, outside every obstacle footprint.
    """
    pitch = GRID_PITCH
    w, h = site.bounds
    ni = int(math.ceil(w / pitch))
    nj = int(math.ceil(h / pitch))
    walk_polys = [
        f.vertices for f in site.features if f.kind in WALKABLE_KINDS and f.level == level
    ]
    if not walk_polys:
        return {}
    obstacle_polys = (
        [f.vertices for f in site.features if f.kind == "obstacle" and f.level == level]
        if include_obstacles
        else []
    )

    walkable = np.zeros((ni, nj), dtype=bool)
    xs_axis = (np.arange(ni) + 0.5) * pitch
    ys_axis = (np.arange(nj) + 0.5) * pitch
    for poly in walk_polys:
        x0, y0, x1, y1 = geo.polygon_bbox(poly)
        i0 = max(0, int((x0 - pitch) / pitch))
        i1 = min(ni, int(x1 / pitch) + 2)
        j0 = max(0, int((y0 - pitch) / pitch))
        j1 = min(nj, int(y1 / pitch) + 2)
        if i0 >= i1 or j0 >= j1:
            continue
        gx, gy = np.meshgrid(xs_axis[i0:i1], ys_axis[j0:j1], indexing="ij")
        walkable[i0:i1, j0:j1] |= geo.points_in_polygon(gx, gy, poly)
    for poly in obstacle_polys:
        x0, y0, x1, y1 = geo.polygon_bbox(poly)
        i0 = max(0, int((x0 - pitch) / pitch))
        i1 = min(ni, int(x1 / pitch) + 2)
        j0 = max(0, int((y0 - pitch) / pitch))
        j1 = min(nj, int(y1 / pitch) + 2)
        if i0 >= i1 or j0 >= j1:
            continue
        gx, gy = np.meshgrid(xs_axis[i0:i1], ys_axis[j0:j1], indexing="ij")
        walkable[i0:i1, j0:j1] &= ~geo.points_in_polygon(gx, gy, poly)

    out: dict[tuple[int, int], tuple[float, float]] = {}
    for i, j in zip(*np.nonzero(walkable)):
        out[(int(i), int(j))] = (float(xs_axis[i]), float(ys_axis[j]))
    return out


_DIAG = math.sqrt(2.0) * GRID_PITCH

_NEIGHBORS = (
    (1, 0, GRID_PITCH),
    (-1, 0, GRID_PITCH),
    (0, 1, GRID_PITCH),
    (0, -1, GRID_PITCH),
    (1, 1, _DIAG),
    (1, -1, _DIAG),
    (-1, 1, _DIAG),
    (-1, -1, _DIAG),
)


def build_walk_graph(site: SiteMap, include_obstacles: bool = True) -> NavGraph:
    nodes: list[tuple[int, tuple[float, float]]] = []
    cell_index: dict[tuple[int, int, int], int] = {}  # (level, i, j) -> node id
    for level in site.levels:
        cells = walk_cells(site, level, include_obstacles=include_obstacles)
        for (i, j) in sorted(cells):
            cell_index[(level, i, j)] = len(nodes)
            nodes.append((level, cells[(i, j)]))
    if not nodes:
        raise EmptyGraph("no walkable surfaces in site")

    edges: list[tuple[int, int, float, Optional[str]]] = []
    for (level, i, j), nid in cell_index.items():
        for di, dj, length in _NEIGHBORS:
            other = cell_index.get((level, i + di, j + dj))
            if other is None:
                continue
            if di != 0 and dj != 0:
                # no squeezing through blocked corners
                if (level, i + di, j) not in cell_index or (level, i, j + dj) not in cell_index:
                    continue
            edges.append((nid, other, length, None))

    connector_nodes: dict[str, dict[int, int]] = {}
    for conn in site.by_kind("connector"):
        anchor = _connector_anchor(conn)
        la, lb = conn.props["connects"]
        length = CONNECTOR_LENGTH[conn.props["kind"]]
        ends: dict[int, int] = {}
        for lv in (la, lb):
            nid = _nearest_cell_node(cell_index, nodes, lv, anchor.get(lv, anchor[la]))
            if nid is None:
                raise GeometryError(
                    f"connector {conn.id!r}: no walkable cell near its anchor on level {lv}"
                )
            ends[lv] = nid
        edges.append((ends[la], ends[lb], length, conn.id))
        edges.append((ends[lb], ends[la], length, conn.id))
        connector_nodes[conn.id] = ends

    return NavGraph(
        mode="walk",
        nodes=nodes,
        edges=edges,
        built_from=site.digest(),
        meta={"cell_index": cell_index, "connector_nodes": connector_nodes},
    )


def _connector_anchor(conn: Feature) -> dict[int, tuple[float, float]]:
    """Per-level anchor point; defaults to the footprint centroid on both levels."""
    centroid = geo.polygon_centroid(conn.vertices)
    anchors = {lv: centroid for lv in conn.props["connects"]}
    for key, val in conn.props.get("exit_anchors", {}).items():
        anchors[int(key)] = (float(val[0]), float(val[1]))
    return anchors


def _nearest_cell_node(
    cell_index: dict[tuple[int, int, int], int],
    nodes: list[tuple[int, tuple[float, float]]],
    level: int,
    pos: tuple[float, float],
    max_radius: float = 6.0,
) -> Optional[int]:
    """Closest walk node to pos on a level, searched ring by ring."""
    pitch = GRID_PITCH
    ci = int(pos[0] / pitch)
    cj = int(pos[1] / pitch)
    max_r = int(max_radius / pitch) + 1
    for r in range(max_r):
        best = None
        best_d = math.inf
        for i in range(ci - r, ci + r + 1):
            for j in range(cj - r, cj + r + 1):
                if max(abs(i - ci), abs(j - cj)) != r:
                    continue
                nid = cell_index.get((level, i, j))
                if nid is not None:
                    d = geo.dist(nodes[nid][1], pos)
                    if d < best_d:
                        best_d = d
                        best = nid
        if best is not None:
            return best
    return None


def build_road_graph(site: SiteMap) -> NavGraph:
    lanes = sorted(site.by_kind("road_lane"), key=lambda f: f.id)
    if not lanes:
        raise EmptyGraph("no road lanes in site")
    nodes: list[tuple[int, tuple[float, float]]] = []
    lane_nodes: dict[str, list[int]] = {}
    lane_arcs: dict[str, list[float]] = {}
    for lane in lanes:
        ids = []
        for v in lane.vertices:
            ids.append(len(nodes))
            nodes.append((lane.level, v))
        lane_nodes[lane.id] = ids
        lane_arcs[lane.id] = geo.polyline_arcs(lane.vertices)

    edges: list[tuple[int, int, float, Optional[str]]] = []
    for lane in lanes:
        ids = lane_nodes[lane.id]
        for a, b in zip(ids, ids[1:]):
            length = geo.dist(nodes[a][1], nodes[b][1])
            if length > 0.0:
                edges.append((a, b, length, None))
        adj = lane.props.get("adjacent_lane_id")
        if adj:
            arcs_a = lane_arcs[lane.id]
            arcs_b = lane_arcs[adj]
            ids_b = lane_nodes[adj]
            for idx, s in enumerate(arcs_a):
                k = min(range(len(arcs_b)), key=lambda m: abs(arcs_b[m] - s))
                length = geo.dist(nodes[ids[idx]][1], nodes[ids_b[k]][1])
                if length > 0.0:
                    edges.append((ids[idx], ids_b[k], length, None))

    return NavGraph(
        mode="road",
        nodes=nodes,
        edges=edges,
        built_from=site.digest(),
        meta={"lane_nodes": lane_nodes, "lane_arcs": lane_arcs},
    )


def build_tram_graph(site: SiteMap) -> NavGraph:
    tracks = sorted(site.by_kind("tram_track"), key=lambda f: f.id)
    if not tracks:
        raise EmptyGraph("no tram tracks in site")
    stops = site.by_kind("stop")
    nodes: list[tuple[int, tuple[float, float]]] = []
    edges: list[tuple[int, int, float, Optional[str]]] = []
    stop_nodes: dict[str, dict[str, int]] = {}  # track id -> stop id -> node
    track_stop_arcs: dict[str, dict[str, float]] = {}
    for track in tracks:
        arcs = geo.polyline_arcs(track.vertices)
        # vertex arcs plus inserted stop arcs, ordered
        inserts: list[tuple[float, Optional[str]]] = [(a, None) for a in arcs]
        per_track: dict[str, float] = {}
        for stop in stops:
            if stop.level != track.level or stop.geometry.type != "polygon":
                continue
            if not geo.polyline_intersects_polygon(track.vertices, stop.vertices):
                continue
            s, _ = geo.project_point_to_polyline(
                geo.polygon_centroid(stop.vertices), track.vertices
            )
            inserts.append((s, stop.id))
            per_track[stop.id] = s
        inserts.sort(key=lambda t: (t[0], t[1] or ""))
        ids: list[int] = []
        smap: dict[str, int] = {}
        prev_arc: Optional[float] = None
        prev_id: Optional[int] = None
        for s, stop_id in inserts:
            if prev_arc is not None and abs(s - prev_arc) < 1e-9:
                nid = prev_id  # coincident vertex and stop share a node
            else:
                nid = len(nodes)
                nodes.append((track.level, geo.point_at_arc(track.vertices, arcs, s)))
                if prev_id is not None:
                    length = s - prev_arc
                    if length > 0.0:
                        edges.append((prev_id, nid, length, None))
                ids.append(nid)
                prev_arc, prev_id = s, nid
            if stop_id is not None:
                smap[stop_id] = nid  # type: ignore[assignment]
        stop_nodes[track.id] = smap
        track_stop_arcs[track.id] = per_track

    return NavGraph(
        mode="tram",
        nodes=nodes,
        edges=edges,
        built_from=site.digest(),
        meta={"stop_nodes": stop_nodes, "track_stop_arcs": track_stop_arcs},
    )


def build_nav_graph(site: SiteMap, mode: str) -> NavGraph:
    if mode == "walk":
        return build_walk_graph(site)
    if mode == "road":
        return build_road_graph(site)
    if mode == "tram":
        return build_tram_graph(site)
    raise ValueError(f"unknown nav mode {mode!r}")


# --- shortest paths -------------------------------------------------------------


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    length: float


def dijkstra_to(
    graph: NavGraph,
    target: int,
    exclude: frozenset[str] = frozenset(),
    blocked_nodes: Optional[set[int]] = None,
) -> list[float]:
    """Distance from every node TO target (reverse Dijkstra)."""
    radj = graph.reverse_adjacency()
    dist = [math.inf] * len(graph.nodes)
    dist[target] = 0.0
    heap = [(0.0, target)]
    blocked = blocked_nodes or ()
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for u, length, conn in radj[v]:
            if conn is not None and conn in exclude:
                continue
            if u in blocked:
                continue
            nd = d + length
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist


def shortest_path(
    graph: NavGraph,
    src: int,
    dst: int,
    exclude: Iterable[str] = (),
    blocked_nodes: Optional[set[int]] = None,
) -> Optional[Path]:
    """Minimum-length path; ties broken by lexicographically smallest node
    sequence. Returns None when disconnected under the exclusions."""
    n = len(graph.nodes)
    if not (0 <= src < n and 0 <= dst < n):
        raise ValueError("node id out of range")
    excl = frozenset(exclude)
    if blocked_nodes and (src in blocked_nodes or dst in blocked_nodes):
        return None
    if src == dst:
        return Path((src,), 0.0)
    dist = dijkstra_to(graph, dst, excl, blocked_nodes)
    if math.isinf(dist[src]):
        return None
    # Greedy lexicographic walk over the shortest-path DAG. Adjacency rows
    # are id-sorted, so the first qualifying successor is the smallest.
    adj = graph.adjacency()
    path = [src]
    u = src
    blocked = blocked_nodes or ()
    while u != dst:
        nxt = None
        for v, length, conn in adj[u]:
            if conn is not None and conn in excl:
                continue
            if v in blocked:
                continue
            if dist[v] + length == dist[u]:
                nxt = v
                break
        if nxt is None:  # float pathology guard; should not happen
            return None
        path.append(nxt)
        u = nxt
    return Path(tuple(path), dist[src])


def nearest_walk_node(graph: NavGraph, level: int, pos: tuple[float, float]) -> Optional[int]:
    """Nearest grid node of a walk graph, or None if nothing within reach."""
    return _nearest_cell_node(graph.meta["cell_index"], graph.nodes, level, pos)
