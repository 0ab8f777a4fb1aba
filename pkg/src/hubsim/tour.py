"""The guided access-barrier tour.

An ordered list of barriers (interrupted tactile guiding strip, scooter
clutter on the sidewalk, broken elevator) is visited one at a time. A ground
polyline guides the avatar to the current barrier; a particle cue fires on
approach, and entering the trigger circle resolves the barrier by mutating
the world: extra tactile paving is laid, the scooters are animated aside,
or arrow guides toward the working elevator are switched on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, TYPE_CHECKING, Union

from . import geometry as geo
from .errors import (
    AlreadyApplied,
    AlternativeUnavailable,
    DanglingReference,
    MalformedDocument,
    UnreachableBarrier,
)
from .events import (
    BARRIER_APPROACHED,
    BARRIER_RESOLVED,
    PARTICLE_CUE,
    TOUR_COMPLETED,
    Event,
)

if TYPE_CHECKING:
    from .simcore import WorldState

BARRIER_KINDS = ("interrupted_guide_strip", "cluttered_sidewalk", "broken_elevator")

GUIDED = "Guided"
APPROACHED = "Approached"
RESOLVED = "Resolved"

DEFAULT_TRIGGER_RADIUS = 3.0  # m
DEFAULT_CUE_RADIUS = 8.0  # m
MARKER_ANCHOR_RANGE = 5.0  # m, marker must hover near its trigger


@dataclass(frozen=True)
class AddGuideStripSegment:
    strip_id: str
    polyline: tuple[tuple[float, float], ...]
    kind: str = "AddGuideStripSegment"


@dataclass(frozen=True)
class ClearObstacles:
    obstacle_ids: tuple[str, ...]
    displacements: tuple[tuple[float, float], ...]
    duration: float  # s
    kind: str = "ClearObstacles"


@dataclass(frozen=True)
class ActivateArrowGuides:
    broken_connector_id: str
    alternative_connector_id: str
    kind: str = "ActivateArrowGuides"


MutationSpec = Union[AddGuideStripSegment, ClearObstacles, ActivateArrowGuides]


@dataclass(frozen=True)
class BarrierDef:
    id: str
    kind: str
    level: int
    trigger_center: tuple[float, float]
    trigger_radius: float
    marker_anchor: tuple[float, float, float]
    cue_radius: float
    info_text: str
    resolution: MutationSpec


@dataclass(frozen=True)
class StartPose:
    level: int
    position: tuple[float, float]
    heading: int


@dataclass(frozen=True)
class BarrierScenario:
    version: int
    start_pose: StartPose
    barriers: tuple[BarrierDef, ...]


@dataclass
class MutationRecord:
    barrier_id: str
    kind: str
    tick: int


def _parse_mutation(bid: str, raw: dict) -> MutationSpec:
    kind = raw.get("kind")
    if kind == "AddGuideStripSegment":
        pl = tuple((float(x), float(y)) for x, y in raw["polyline"])
        if len(pl) < 2:
            raise MalformedDocument(f"barrier {bid!r}: polyline needs >= 2 vertices")
        return AddGuideStripSegment(str(raw["strip_id"]), pl)
    if kind == "ClearObstacles":
        ids = tuple(str(i) for i in raw["obstacle_ids"])
        disps = tuple((float(x), float(y)) for x, y in raw["displacements"])
        if len(ids) != len(disps) or not ids:
            raise MalformedDocument(
                f"barrier {bid!r}: obstacle_ids and displacements must pair up"
            )
        return ClearObstacles(ids, disps, float(raw["duration"]))
    if kind == "ActivateArrowGuides":
        return ActivateArrowGuides(
            str(raw["broken_connector_id"]), str(raw["alternative_connector_id"])
        )
    raise MalformedDocument(f"barrier {bid!r}: unknown mutation kind {kind!r}")


def load_scenario(raw: bytes) -> BarrierScenario:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"scenario: {exc}") from exc
    try:
        sp = doc["start_pose"]
        start = StartPose(
            level=int(sp["level"]),
            position=(float(sp["position"][0]), float(sp["position"][1])),
            heading=int(sp["heading"]),
        )
        barriers = []
        for b in doc["barriers"]:
            bid = str(b["id"])
            trig = b["trigger"]
            hl = b.get("highlight", {})
            anchor = hl.get("marker_anchor", [*trig["center"], 2.5])
            barriers.append(
                BarrierDef(
                    id=bid,
                    kind=str(b["kind"]),
                    level=int(b["level"]),
                    trigger_center=(float(trig["center"][0]), float(trig["center"][1])),
                    trigger_radius=float(trig.get("radius", DEFAULT_TRIGGER_RADIUS)),
                    marker_anchor=(
                        float(anchor[0]),
                        float(anchor[1]),
                        float(anchor[2]),
                    ),
                    cue_radius=float(hl.get("cue_radius", DEFAULT_CUE_RADIUS)),
                    info_text=str(b.get("info_text", "")),
                    resolution=_parse_mutation(bid, b["resolution"]),
                )
            )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise MalformedDocument(f"scenario: bad structure: {exc}") from exc
    return BarrierScenario(
        version=int(doc.get("version", 1)),
        start_pose=start,
        barriers=tuple(barriers),
    )


def validate_scenario(scenario: BarrierScenario, site) -> list[str]:
    """Cross-checks against a loaded site; empty list iff valid."""
    problems: list[str] = []
    seen: set[str] = set()
    if scenario.start_pose.heading % 45 != 0:
        problems.append("start pose heading must be a multiple of 45")
    if scenario.start_pose.level not in site.levels:
        problems.append(f"start pose level {scenario.start_pose.level} not in site")
    walk_polys: dict[int, list] = {}
    for f in site.features:
        if f.kind in ("walk_surface", "crossing"):
            walk_polys.setdefault(f.level, []).append(f.vertices)
    for b in scenario.barriers:
        if b.id in seen:
            problems.append(f"duplicate barrier id {b.id!r}")
        seen.add(b.id)
        if b.kind not in BARRIER_KINDS:
            problems.append(f"barrier {b.id!r}: unknown kind {b.kind!r}")
        if b.level not in site.levels:
            problems.append(f"barrier {b.id!r}: level {b.level} not in site")
        if b.cue_radius < b.trigger_radius:
            problems.append(f"barrier {b.id!r}: cue_radius smaller than trigger radius")
        ax, ay, _ = b.marker_anchor
        if geo.dist((ax, ay), b.trigger_center) > MARKER_ANCHOR_RANGE:
            problems.append(
                f"barrier {b.id!r}: marker anchor farther than "
                f"{MARKER_ANCHOR_RANGE} m from trigger center"
            )
        if not any(
            geo.point_in_polygon(b.trigger_center, poly)
            for poly in walk_polys.get(b.level, [])
        ):
            problems.append(f"barrier {b.id!r}: trigger center not on a walkable surface")
        problems.extend(_validate_mutation(b, site))
    return problems


def _validate_mutation(b: BarrierDef, site) -> list[str]:
    problems = []
    res = b.resolution
    if isinstance(res, AddGuideStripSegment):
        if not site.has_feature(res.strip_id):
            problems.append(f"barrier {b.id!r}: no guide strip {res.strip_id!r}")
        elif site.feature(res.strip_id).kind != "guide_strip":
            problems.append(f"barrier {b.id!r}: {res.strip_id!r} is not a guide_strip")
    elif isinstance(res, ClearObstacles):
        if res.duration <= 0:
            problems.append(f"barrier {b.id!r}: clearing duration must be > 0")
        for oid in res.obstacle_ids:
            if not site.has_feature(oid):
                problems.append(f"barrier {b.id!r}: no obstacle {oid!r}")
            elif site.feature(oid).kind != "obstacle":
                problems.append(f"barrier {b.id!r}: {oid!r} is not an obstacle")
    elif isinstance(res, ActivateArrowGuides):
        for cid in (res.broken_connector_id, res.alternative_connector_id):
            if not site.has_feature(cid):
                problems.append(f"barrier {b.id!r}: no connector {cid!r}")
            elif site.feature(cid).kind != "connector":
                problems.append(f"barrier {b.id!r}: {cid!r} is not a connector")
        if (
            site.has_feature(res.alternative_connector_id)
            and site.feature(res.alternative_connector_id).kind == "connector"
            and not site.feature(res.alternative_connector_id).props.get("operational")
        ):
            problems.append(
                f"barrier {b.id!r}: alternative connector "
                f"{res.alternative_connector_id!r} is not operational"
            )
    return problems


def ensure_scenario_valid(scenario: BarrierScenario, site) -> None:
    """Raise a typed error on the first validation problem."""
    problems = validate_scenario(scenario, site)
    if not problems:
        return
    first = problems[0]
    if "not operational" in first:
        raise AlternativeUnavailable(first)
    if "no guide strip" in first or "no obstacle" in first or "no connector" in first:
        raise DanglingReference(first)
    raise MalformedDocument(first)


def scenario_digest(raw: bytes) -> str:
    import hashlib

    return hashlib.sha256(raw).hexdigest()


# --- tour state -------------------------------------------------------------


@dataclass
class TourState:
    scenario: BarrierScenario
    target_index: int
    phases: list[str]
    cued: list[bool]
    guided_nodes: list[int]
    guided_path: list[tuple[int, tuple[float, float]]]
    completed: bool
    completed_emitted: bool
    _last_start_node: int = -1
    _last_version: int = -1

    @property
    def barriers(self) -> tuple[BarrierDef, ...]:
        return self.scenario.barriers

    def target(self) -> Optional[BarrierDef]:
        if self.target_index >= len(self.scenario.barriers):
            return None
        return self.scenario.barriers[self.target_index]


def _target_node(geo_rt, b: BarrierDef) -> Optional[int]:
    return geo_rt.nearest_runtime_node(b.level, b.trigger_center)


def _recompute_guided(tour: TourState, geo_rt, avatar) -> None:
    b = tour.target()
    if b is None:
        tour.guided_nodes = []
        tour.guided_path = []
        return
    start = geo_rt.nearest_runtime_node(avatar.level, avatar.position)
    if start is None:
        return
    if start == tour._last_start_node and geo_rt.version == tour._last_version:
        return
    tgt = _target_node(geo_rt, b)
    if tgt is None:
        return
    nodes = geo_rt.guided_route(avatar.level, avatar.position, tgt)
    tour._last_start_node = start
    tour._last_version = geo_rt.version
    if nodes is None:
        return  # keep the previous path until a route exists again
    tour.guided_nodes = nodes
    tour.guided_path = geo_rt.node_polyline(nodes)


def init_tour(scenario: BarrierScenario, geo_rt, avatar) -> TourState:
    """Start the tour: everything Guided, path to the first barrier laid out."""
    tour = TourState(
        scenario=scenario,
        target_index=0,
        phases=[GUIDED] * len(scenario.barriers),
        cued=[False] * len(scenario.barriers),
        guided_nodes=[],
        guided_path=[],
        completed=not scenario.barriers,
        completed_emitted=False,
    )
    # reachability under avatar routing rules (operational connectors OK)
    for b in scenario.barriers:
        tgt = _target_node(geo_rt, b)
        if tgt is None:
            raise UnreachableBarrier(f"barrier {b.id!r}: trigger has no nearby walk node")
        if geo_rt.guided_route(avatar.level, avatar.position, tgt) is None:
            raise UnreachableBarrier(f"barrier {b.id!r}: no walk path from start pose")
    if scenario.barriers:
        _recompute_guided(tour, geo_rt, avatar)
    return tour


def advance_tour(world: "WorldState") -> None:
    """Phase-7 tick: cue, trigger, resolve, advance; at most one barrier."""
    tour = world.tour
    avatar = world.avatar
    geo_rt = world.geo
    b = tour.target()
    if b is None:
        if tour.completed and not tour.completed_emitted:
            tour.completed_emitted = True
            world.emit(Event(world.tick, TOUR_COMPLETED, {}))
        return

    _recompute_guided(tour, geo_rt, avatar)

    on_level = avatar.level == b.level
    d = geo.dist(avatar.position, b.trigger_center) if on_level else math.inf

    if tour.phases[tour.target_index] == GUIDED and not tour.cued[tour.target_index]:
        if d <= b.cue_radius:
            tour.cued[tour.target_index] = True
            world.emit(
                Event(
                    world.tick,
                    PARTICLE_CUE,
                    {
                        "barrier": b.id,
                        "center": [b.trigger_center[0], b.trigger_center[1]],
                        "radius": b.cue_radius,
                    },
                )
            )

    if d <= b.trigger_radius:
        idx = tour.target_index
        tour.phases[idx] = APPROACHED
        world.emit(
            Event(
                world.tick,
                BARRIER_APPROACHED,
                {
                    "barrier": b.id,
                    "info_text": b.info_text,
                    "via_interact": bool(world.input_act),
                },
            )
        )
        apply_resolution(b, world)
        tour.phases[idx] = RESOLVED
        world.emit(
            Event(
                world.tick,
                BARRIER_RESOLVED,
                {"barrier": b.id, "mutation_kind": b.resolution.kind},
            )
        )
        tour.target_index += 1
        tour._last_start_node = -1  # force a fresh path to the next target
        if tour.target_index >= len(tour.barriers):
            tour.completed = True
            tour.completed_emitted = True
            world.emit(Event(world.tick, TOUR_COMPLETED, {}))
        else:
            _recompute_guided(tour, geo_rt, avatar)


def apply_resolution(b: BarrierDef, world: "WorldState") -> MutationRecord:
    """Mutate the world per the barrier's resolution spec, once."""
    if any(m.barrier_id == b.id for m in world.mutations_applied):
        raise AlreadyApplied(f"barrier {b.id!r} already resolved")
    geo_rt = world.geo
    res = b.resolution
    if isinstance(res, AddGuideStripSegment):
        geo_rt.append_strip_segment(res.strip_id, res.polyline)
    elif isinstance(res, ClearObstacles):
        for oid in res.obstacle_ids:
            if not world.site.has_feature(oid):
                raise DanglingReference(f"no obstacle {oid!r}")
        geo_rt.start_clear_animation(
            res.obstacle_ids,
            res.displacements,
            world.tick,
            int(round(res.duration / world.dt)),
        )
    elif isinstance(res, ActivateArrowGuides):
        start = geo_rt.connector_node(res.broken_connector_id, b.level)
        goal = geo_rt.connector_node(res.alternative_connector_id, b.level)
        nodes = geo_rt.guided_route(
            geo_rt.walk_graph.nodes[start][0], geo_rt.walk_graph.nodes[start][1], goal
        )
        if nodes is None:
            raise DanglingReference(
                f"no arrow path {res.broken_connector_id!r} -> "
                f"{res.alternative_connector_id!r}"
            )
        world.arrow_guides[b.id] = geo_rt.node_polyline(nodes)
    record = MutationRecord(barrier_id=b.id, kind=res.kind, tick=world.tick)
    world.mutations_applied.append(record)
    return record
