"""Road vehicles, pedestrians, and schedule-driven trams.

Behavior parameters come from archetype catalogs; the catalog bundled with
the package carries 107 pedestrian and 19 vehicle archetypes. All functions
here either are pure or mutate only the agent they were handed, and draw
randomness exclusively from the world's single PRNG stream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, TYPE_CHECKING

from . import geometry as geo
from .errors import MalformedDocument, UnknownHead, UnknownStop
from .events import (
    AGENT_DESPAWNED,
    AGENT_SPAWNED,
    LANE_CHANGE,
    TRANSIT_ARRIVED,
    TRANSIT_DEPARTED,
    Event,
)

if TYPE_CHECKING:  # circular-import guard; world is duck-typed at runtime
    from .simcore import WorldState

VEHICLE = "vehicle"
PEDESTRIAN = "pedestrian"
TRAM = "tram"

PED_COUNT = 107
VEHICLE_COUNT = 19

# Car-following / overtaking tuning. Stated here, overridable per world.
MIN_GAP = 2.0  # m, standstill gap floor
GAP_TIME = 1.5  # s, time-gap to the leader
BLOCKED_SPEED_FACTOR = 0.5  # leader slower than this x desired counts as blocking
BLOCKED_PATIENCE = 3.0  # s of blocking before an overtake attempt
CHANGE_FRONT_TIME = 1.5  # s x own speed of clear road ahead on the target lane
CHANGE_REAR_TIME = 2.0  # s x follower speed of clear road behind
PED_SEPARATION_MARGIN = 0.1  # m beyond touching radii
PED_REPATH_COOLDOWN = 2.0  # s
PED_CONSUME_RADIUS = 0.45  # m, waypoint reached; just under the node pitch
PED_ARRIVE_RADIUS = 1.2  # m, close enough to the goal node to finish
RED_STOP_SETBACK = 0.2  # m, aim point short of the stop line


@dataclass(frozen=True)
class PedArchetype:
    id: str
    walk_speed: float  # m/s
    radius: float  # m


@dataclass(frozen=True)
class VehicleArchetype:
    id: str
    length: float  # m
    max_speed: float  # m/s
    accel: float  # m/s^2
    decel: float  # m/s^2


@dataclass(frozen=True)
class TramArchetype:
    id: str
    length: float
    max_speed: float
    dwell: float  # s at each stop


@dataclass(frozen=True)
class ArchetypeCatalog:
    pedestrians: tuple[PedArchetype, ...]
    vehicles: tuple[VehicleArchetype, ...]
    trams: tuple[TramArchetype, ...]
    cyclists: tuple[PedArchetype, ...] = ()  # fast pedestrians, optional

    def ped_archetype(self, idx: int) -> PedArchetype:
        # pedestrian-kind agents index the concatenation pedestrians + cyclists
        if idx < len(self.pedestrians):
            return self.pedestrians[idx]
        return self.cyclists[idx - len(self.pedestrians)]


def load_catalog(raw: bytes) -> ArchetypeCatalog:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"catalog: {exc}") from exc
    try:
        peds = tuple(
            PedArchetype(str(p["id"]), float(p["walk_speed"]), float(p["radius"]))
            for p in doc["pedestrians"]
        )
        vehicles = tuple(
            VehicleArchetype(
                str(v["id"]),
                float(v["length"]),
                float(v["max_speed"]),
                float(v["accel"]),
                float(v["decel"]),
            )
            for v in doc["vehicles"]
        )
        trams = tuple(
            TramArchetype(
                str(t["id"]), float(t["length"]), float(t["max_speed"]), float(t["dwell"])
            )
            for t in doc["trams"]
        )
        cyclists = tuple(
            PedArchetype(str(p["id"]), float(p["walk_speed"]), float(p["radius"]))
            for p in doc.get("cyclists", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"catalog: bad entry: {exc}") from exc
    return ArchetypeCatalog(peds, vehicles, trams, cyclists)


def validate_catalog(catalog: ArchetypeCatalog) -> list[str]:
    """Cardinality and parameter-range report; empty iff valid."""
    problems: list[str] = []
    if len(catalog.pedestrians) != PED_COUNT:
        problems.append(
            f"pedestrian catalog must have exactly {PED_COUNT} entries, "
            f"got {len(catalog.pedestrians)}"
        )
    if len(catalog.vehicles) != VEHICLE_COUNT:
        problems.append(
            f"vehicle catalog must have exactly {VEHICLE_COUNT} entries, "
            f"got {len(catalog.vehicles)}"
        )
    if not catalog.trams:
        problems.append("tram catalog must have at least one entry")
    for p in catalog.pedestrians:
        if not (1.0 <= p.walk_speed <= 1.8):
            problems.append(f"pedestrian {p.id}: walk_speed {p.walk_speed} outside [1.0, 1.8]")
        if not (0.25 <= p.radius <= 0.4):
            problems.append(f"pedestrian {p.id}: radius {p.radius} outside [0.25, 0.4]")
    for c in catalog.cyclists:
        if not (1.0 <= c.walk_speed <= 5.0):
            problems.append(f"cyclist {c.id}: speed {c.walk_speed} outside [1.0, 5.0]")
    for v in catalog.vehicles:
        if not (3.5 <= v.length <= 6.0):
            problems.append(f"vehicle {v.id}: length {v.length} outside [3.5, 6.0]")
        if v.max_speed <= 0 or v.accel <= 0 or v.decel <= 0:
            problems.append(f"vehicle {v.id}: speeds and accelerations must be positive")
    return problems


# --- traffic signals -------------------------------------------------------------


@dataclass(frozen=True)
class SignalProgram:
    phases: tuple[tuple[str, float], ...]  # (color, duration s)
    offset: float

    @property
    def cycle(self) -> float:
        return sum(d for _, d in self.phases)


class SignalBank:
    """Signal programs keyed by signal_head feature id; pure time lookup."""

    def __init__(self, programs: dict[str, SignalProgram]):
        self.programs = dict(programs)

    @staticmethod
    def from_site(site) -> "SignalBank":
        programs = {}
        for head in site.by_kind("signal_head"):
            raw = head.props.get("phases")
            if not raw:
                raise MalformedDocument(f"signal_head {head.id!r}: missing phases")
            phases = tuple((str(c), float(d)) for c, d in raw)
            programs[head.id] = SignalProgram(phases, float(head.props.get("offset", 0.0)))
        return SignalBank(programs)

    def state(self, head: str, t: float) -> str:
        try:
            prog = self.programs[head]
        except KeyError:
            raise UnknownHead(f"no signal head {head!r}") from None
        return signal_state(prog, t)


def signal_state(program: SignalProgram, t: float) -> str:
    """Color at time t; offset shifts the program phase."""
    c = (t + program.offset) % program.cycle
    acc = 0.0
    for color, duration in program.phases:
        acc += duration
        if c < acc:
            return color
    return program.phases[-1][0]


def validate_signal_program(head_id: str, program: SignalProgram) -> list[str]:
    problems = []
    colors = [c for c, _ in program.phases]
    if any(d <= 0 for _, d in program.phases):
        problems.append(f"signal {head_id}: phase durations must be > 0")
    if colors.count("green") != 1 or colors.count("red") != 1:
        problems.append(f"signal {head_id}: exactly one green and one red phase required")
    if any(c not in ("green", "yellow", "red") for c in colors):
        problems.append(f"signal {head_id}: unknown phase color")
    return problems


# --- transit schedule -------------------------------------------------------------


@dataclass(frozen=True)
class TransitLine:
    id: str
    stops: tuple[str, ...]
    offsets: tuple[float, ...]  # first-stop arrival offsets within one period
    period: float
    run_times: tuple[float, ...]  # arrival-to-arrival time between consecutive stops

    def arrival_prefix(self, stop_index: int) -> float:
        return sum(self.run_times[:stop_index])


@dataclass(frozen=True)
class TransitSchedule:
    lines: tuple[TransitLine, ...]

    def line(self, line_id: str) -> TransitLine:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise KeyError(line_id)


def load_schedule(raw: bytes) -> TransitSchedule:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"schedule: {exc}") from exc
    try:
        lines = tuple(
            TransitLine(
                id=str(ln["id"]),
                stops=tuple(str(s) for s in ln["stops"]),
                offsets=tuple(float(o) for o in ln["offsets"]),
                period=float(ln["period"]),
                run_times=tuple(float(r) for r in ln.get("run_times", [])),
            )
            for ln in doc["lines"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"schedule: bad entry: {exc}") from exc
    return TransitSchedule(lines)


HEADWAY_MIN = 300.0  # s
HEADWAY_MAX = 600.0  # s


def validate_schedule(schedule: TransitSchedule) -> list[str]:
    problems: list[str] = []
    for ln in schedule.lines:
        if not ln.stops:
            problems.append(f"line {ln.id}: needs at least one stop")
            continue
        if len(ln.run_times) != len(ln.stops) - 1:
            problems.append(f"line {ln.id}: run_times must have len(stops)-1 entries")
        if any(r <= 0 for r in ln.run_times):
            problems.append(f"line {ln.id}: run times must be positive")
        if ln.period <= 0 or not ln.offsets:
            problems.append(f"line {ln.id}: needs a positive period and offsets")
            continue
        offs = sorted(ln.offsets)
        if offs[0] < 0 or offs[-1] >= ln.period:
            problems.append(f"line {ln.id}: offsets must lie in [0, period)")
            continue
        # headway over the repeating horizon: gaps between consecutive
        # arrivals, including the wrap into the next period
        gaps = [b - a for a, b in zip(offs, offs[1:])]
        gaps.append(ln.period - offs[-1] + offs[0])
        for g in gaps:
            if not (HEADWAY_MIN <= g <= HEADWAY_MAX):
                problems.append(
                    f"line {ln.id}: headway {g:.0f} s outside "
                    f"[{HEADWAY_MIN:.0f}, {HEADWAY_MAX:.0f}] s"
                )
    return problems


def transit_arrivals(
    schedule: TransitSchedule, stop_id: str, t0: float, t1: float
) -> list[float]:
    """All scheduled arrival times at a stop within [t0, t1), ascending."""
    served = False
    times: list[float] = []
    for ln in schedule.lines:
        for idx, s in enumerate(ln.stops):
            if s != stop_id:
                continue
            served = True
            prefix = ln.arrival_prefix(idx)
            for off in ln.offsets:
                base = off + prefix
                k = max(0, math.floor((t0 - base) / ln.period))
                t = base + k * ln.period
                while t < t1:
                    if t >= t0:
                        times.append(t)
                    t += ln.period
    if not served:
        raise UnknownStop(f"stop {stop_id!r} not served by any line")
    times.sort()
    return times


# --- agent state -------------------------------------------------------------


@dataclass
class AgentState:
    id: int
    kind: str  # vehicle | pedestrian | tram
    archetype_id: int
    level: int
    position: tuple[float, float]
    speed: float = 0.0
    route: list[int] = field(default_factory=list)
    route_index: int = 0
    # vehicle fields
    lane_id: str = ""
    s: float = 0.0  # front-bumper arc position on the lane
    length: float = 0.0
    desired_speed: float = 0.0
    blocked_time: float = 0.0
    # tram fields
    line_id: str = ""
    next_stop_index: int = 0
    dwell_remaining: float = 0.0
    spawn_time: float = 0.0
    # pedestrian fields
    goal_node: int = -1
    repath_cooldown: float = 0.0
    waiting_stop: str = ""  # stop feature id while congregating
    waiting_line: str = ""  # line whose departure releases the agent
    route_version: int = -1
    stall_time: float = 0.0
    despawn: bool = False


# --- vehicles -------------------------------------------------------------


def vehicle_step(world: "WorldState", v: AgentState, dt: float) -> None:
    """One kinematic update: follow, obey signals, maybe change lanes."""
    geo_rt = world.geo
    lane = geo_rt.lane(v.lane_id)
    arch = world.catalog.vehicles[v.archetype_id]
    t_now = world.tick * world.dt

    leader = _lane_leader(world, v)
    # overtaking bookkeeping happens against the pre-move state
    if leader is not None and leader.speed < BLOCKED_SPEED_FACTOR * v.desired_speed:
        v.blocked_time += dt
    else:
        v.blocked_time = 0.0
    if v.blocked_time > BLOCKED_PATIENCE:
        if _try_lane_change(world, v):
            lane = geo_rt.lane(v.lane_id)
            leader = _lane_leader(world, v)
            v.blocked_time = 0.0

    target = min(v.desired_speed, lane.speed_limit)
    speed = min(target, v.speed + arch.accel * dt)

    # (a) time-gap to the leader: keep gap >= max(MIN_GAP, GAP_TIME * speed)
    if leader is not None:
        gap_now = (leader.s - leader.length) - v.s
        v_safe = (gap_now + leader.speed * dt - MIN_GAP) / (GAP_TIME + dt)
        speed = min(speed, max(0.0, v_safe))

    # (b) red signal: never cross the stop line
    red_line_s: Optional[float] = None
    for stop_s, head_id in lane.stop_lines:
        if stop_s < v.s:
            continue
        if world.signals.state(head_id, t_now) == "red":
            d = stop_s - v.s - RED_STOP_SETBACK
            allowed = math.sqrt(max(0.0, 2.0 * arch.decel * d))
            speed = min(speed, allowed)
            if red_line_s is None or stop_s < red_line_s:
                red_line_s = stop_s

    speed = max(speed, v.speed - arch.decel * dt)  # decel capability limit
    speed = max(0.0, min(speed, arch.max_speed))

    new_s = v.s + speed * dt
    if red_line_s is not None and new_s > red_line_s:
        new_s = red_line_s  # hard contract: a red stop line is never crossed
        speed = 0.0
    if leader is not None:
        limit = leader.s - leader.length
        if new_s > limit:
            new_s = limit
            speed = 0.0

    if new_s > lane.length:
        nxt = geo_rt.lane_successor(v.lane_id)
        if nxt is None:
            v.s = lane.length
            v.speed = speed
            v.despawn = True
            _place_vehicle(geo_rt, v)
            return
        new_s -= lane.length
        v.lane_id = nxt
        lane = geo_rt.lane(nxt)
        new_s = min(new_s, lane.length)
    v.s = new_s
    v.speed = speed
    _place_vehicle(geo_rt, v)


def _place_vehicle(geo_rt, v: AgentState) -> None:
    lane = geo_rt.lane(v.lane_id)
    v.position = geo.point_at_arc(lane.vertices, lane.arcs, v.s)
    v.level = lane.level


def _lane_leader(world: "WorldState", v: AgentState) -> Optional[AgentState]:
    leader = None
    best = math.inf
    for other in world.vehicles_on_lane(v.lane_id):
        if other.id == v.id:
            continue
        if other.s > v.s and other.s < best:
            best = other.s
            leader = other
    return leader


def _gaps_on_lane(
    world: "WorldState", lane_id: str, s: float, length: float
) -> tuple[float, float, Optional[int], Optional[int]]:
    """(front gap, rear gap, leader id, follower id) for a probe at arc s."""
    front = math.inf
    rear = math.inf
    leader_id = None
    follower_id = None
    rear_speed = 0.0
    for other in world.vehicles_on_lane(lane_id):
        if other.s >= s:
            g = (other.s - other.length) - s
            if g < front:
                front = g
                leader_id = other.id
        else:
            g = (s - length) - other.s
            if g < rear:
                rear = g
                follower_id = other.id
                rear_speed = other.speed
    return front, rear, leader_id, follower_id


def _try_lane_change(world: "WorldState", v: AgentState) -> bool:
    lane = world.geo.lane(v.lane_id)
    adj_id = lane.adjacent_lane_id
    if not adj_id:
        return False
    adj = world.geo.lane(adj_id)
    s_b, offset = geo.project_point_to_polyline(v.position, adj.vertices)
    if s_b <= v.length or s_b >= adj.length:
        return False
    front, rear, leader_id, follower_id = _gaps_on_lane(world, adj_id, s_b, v.length)
    follower = world.agents.get(follower_id) if follower_id is not None else None
    need_front = CHANGE_FRONT_TIME * v.speed
    need_rear = CHANGE_REAR_TIME * (follower.speed if follower else 0.0)
    if front < need_front or rear < need_rear or front < 0.0 or rear < 0.0:
        return False
    slot = (adj_id, leader_id, follower_id)
    if slot in world.claimed_gaps:
        return False  # the smaller-id vehicle got here first this tick
    world.claimed_gaps.add(slot)
    v.lane_id = adj_id
    v.s = s_b
    _place_vehicle(world.geo, v)
    world.emit(
        Event(
            world.tick,
            LANE_CHANGE,
            {
                "agent": v.id,
                "from_lane": lane.id,
                "to_lane": adj_id,
                "front_gap": front,
                "rear_gap": rear,
            },
        )
    )
    return True


# --- pedestrians -------------------------------------------------------------


def pedestrian_step(world: "WorldState", p: AgentState, dt: float) -> None:
    """Advance toward the goal node with separation steering.

    Movement never exceeds walk speed x dt and never penetrates a neighbor
    closer than the sum of body radii (circle-clamped forward motion).
    """
    geo_rt = world.geo
    arch = world.catalog.ped_archetype(p.archetype_id)
    p.repath_cooldown = max(0.0, p.repath_cooldown - dt)

    if p.waiting_stop:
        if (p.waiting_line, p.waiting_stop) in world.departed_this_tick:
            p.despawn = True
        p.speed = 0.0
        return

    if p.route_version != geo_rt.version and p.repath_cooldown == 0.0:
        _repath(world, p)

    if p.route_index >= len(p.route):
        p.speed = 0.0
        if p.waiting_stop == "":
            if p.goal_node >= 0 and p.route and p.route[-1] == p.goal_node:
                _arrive(world, p)
            elif not p.route:
                p.despawn = True
        return

    nodes = geo_rt.walk_graph.nodes
    step = arch.walk_speed * dt
    pos = p.position
    # consume waypoints we pass near; the goal node gets a wider radius so a
    # crowd at a stop does not have to take the exact node one body at a time
    while p.route_index < len(p.route):
        target = nodes[p.route[p.route_index]][1]
        d = geo.dist(pos, target)
        reach = PED_ARRIVE_RADIUS if p.route_index == len(p.route) - 1 else PED_CONSUME_RADIUS
        if d > max(step * 0.5, reach):
            break
        p.route_index += 1
    if p.route_index >= len(p.route):
        _arrive(world, p)
        p.speed = 0.0
        return

    target = nodes[p.route[p.route_index]][1]
    forward = geo.normalize(geo.vec_sub(target, pos))
    move = geo.vec_scale(forward, step)

    neighbor = world.nearest_body(p)
    if neighbor is not None:
        q, qr = neighbor
        reach = arch.radius + qr + PED_SEPARATION_MARGIN
        if geo.dist(pos, q) < reach + step:
            # lateral repulsion perpendicular to travel, away from the neighbor
            perp = (-forward[1], forward[0])
            side = geo.vec_dot(perp, geo.vec_sub(pos, q))
            if side < 0:
                perp = (-perp[0], -perp[1])
            move = geo.vec_add(move, geo.vec_scale(perp, 0.5 * step))
            mlen = geo.vec_len(move)
            if mlen > step:
                move = geo.vec_scale(move, step / mlen)
            # clamp forward motion at the hard-contact circle
            hard = arch.radius + qr
            move = _clamp_to_circle(pos, move, q, hard)

    candidate = geo.vec_add(pos, move)
    if not geo_rt.walkable_point(p.level, candidate):
        candidate = geo.vec_add(pos, geo.vec_scale(forward, min(step, geo.dist(pos, target))))
        if not geo_rt.walkable_point(p.level, candidate):
            candidate = pos

    moved = geo.dist(pos, candidate)
    if moved < 0.25 * step:
        p.stall_time += dt
        if p.stall_time > 1.5 and p.repath_cooldown == 0.0:
            _repath(world, p)
    else:
        p.stall_time = 0.0
    p.position = candidate
    p.speed = moved / dt if dt > 0 else 0.0


def _clamp_to_circle(
    pos: tuple[float, float], move: tuple[float, float], center: tuple[float, float], radius: float
) -> tuple[float, float]:
    """Largest t in [0,1] with |pos + t*move - center| >= radius."""
    fx, fy = pos[0] - center[0], pos[1] - center[1]
    mx, my = move
    a = mx * mx + my * my
    if a == 0.0:
        return move
    b = 2.0 * (fx * mx + fy * my)
    c = fx * fx + fy * fy - radius * radius
    if c <= 0.0:
        # already touching: strip the inward radial part and keep the
        # tangential slide, otherwise contact pairs deadlock and pile up
        d2 = fx * fx + fy * fy
        if d2 == 0.0:
            return move
        radial = (fx * mx + fy * my) / d2
        if radial >= 0.0:
            return move
        return (mx - radial * fx, my - radial * fy)
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return move  # trajectory misses the circle
    root = (-b - math.sqrt(disc)) / (2.0 * a)
    if 0.0 <= root < 1.0:
        return (mx * root, my * root)
    return move


def _arrive(world: "WorldState", p: AgentState) -> None:
    stop_id = world.ped_goal_stops.get(p.id, "")
    if stop_id:
        p.waiting_stop = stop_id
        p.speed = 0.0
    else:
        p.despawn = True


def _repath(world: "WorldState", p: AgentState) -> None:
    geo_rt = world.geo
    start = geo_rt.nearest_runtime_node(p.level, p.position)
    if start is None or p.goal_node < 0:
        p.route = []
        p.route_index = 0
        return
    path = geo_rt.walk_route(start, p.goal_node)
    p.route = path or []
    p.route_index = 0
    p.route_version = geo_rt.version
    p.repath_cooldown = PED_REPATH_COOLDOWN
    p.stall_time = 0.0


# --- spawning -------------------------------------------------------------


def spawn_tick(world: "WorldState", dt: float) -> None:
    """Bernoulli spawn draws per spawn point, in feature-id order.

    The Bernoulli draw always happens so the stream position is a pure
    function of the tick count; a blocked vehicle entry discards the result.
    """
    for sp in world.spawn_points:
        u = world.rng.random()
        rate = float(sp.props.get("rate", 0.0))
        if u >= rate * dt:
            continue
        kind = sp.props["agent_kind"]
        if kind == "vehicle":
            _spawn_vehicle(world, sp)
        else:
            _spawn_pedestrian(world, sp, cyclist=(kind == "cyclist"))


def _spawn_vehicle(world: "WorldState", sp) -> None:
    lane = world.geo.lane(sp.props["lane_id"])
    entry_clear = max(MIN_GAP, GAP_TIME * lane.speed_limit)
    for other in world.vehicles_on_lane(lane.id):
        if other.s - other.length < entry_clear:
            return  # entry blocked; the Bernoulli draw is already consumed
    idx = world.rng.randrange(len(world.catalog.vehicles))
    arch = world.catalog.vehicles[idx]
    v = AgentState(
        id=world.alloc_agent_id(),
        kind=VEHICLE,
        archetype_id=idx,
        level=lane.level,
        position=lane.vertices[0],
        speed=min(arch.max_speed, lane.speed_limit),
        lane_id=lane.id,
        s=arch.length,
        length=arch.length,
        desired_speed=arch.max_speed,
    )
    _place_vehicle(world.geo, v)
    world.add_agent(v)
    world.emit(
        Event(
            world.tick,
            AGENT_SPAWNED,
            {"agent": v.id, "agent_kind": VEHICLE, "archetype": arch.id},
        )
    )


def _spawn_pedestrian(world: "WorldState", sp, cyclist: bool) -> None:
    catalog = world.catalog
    if cyclist:
        if not catalog.cyclists:
            return
        idx = len(catalog.pedestrians) + world.rng.randrange(len(catalog.cyclists))
    else:
        idx = world.rng.randrange(len(catalog.pedestrians))
    arch = catalog.ped_archetype(idx)

    goal_ids = sp.props.get("goal_ids") or []
    goal_feature = goal_ids[world.rng.randrange(len(goal_ids))] if goal_ids else None

    pos = sp.vertices[0]
    start = world.geo.nearest_runtime_node(sp.level, pos)
    if start is None:
        return
    p = AgentState(
        id=world.alloc_agent_id(),
        kind=PEDESTRIAN,
        archetype_id=idx,
        level=sp.level,
        position=world.geo.walk_graph.nodes[start][1],
    )
    stop_line = ""
    if goal_feature is not None:
        feat = world.site.feature(goal_feature)
        goal_pos = (
            geo.polygon_centroid(feat.vertices)
            if feat.geometry.type == "polygon"
            else feat.vertices[0]
        )
        goal = world.geo.nearest_runtime_node(feat.level, goal_pos)
        if feat.kind == "stop":
            line_ids = [
                ln for ln in feat.props.get("line_ids", []) if world.has_line(ln)
            ]
            if line_ids:
                stop_line = line_ids[world.rng.randrange(len(line_ids))]
    else:
        goal = None
    if goal is None:
        return
    p.goal_node = goal
    route = world.geo.walk_route(start, goal)
    if route is None:
        return
    p.route = route
    p.route_index = 0
    p.route_version = world.geo.version
    world.add_agent(p)
    if goal_feature is not None and stop_line:
        world.ped_goal_stops[p.id] = goal_feature
        p.waiting_line = stop_line
    world.emit(
        Event(
            world.tick,
            AGENT_SPAWNED,
            {"agent": p.id, "agent_kind": PEDESTRIAN, "archetype": arch.id},
        )
    )


# --- trams -------------------------------------------------------------


@dataclass
class TramRun:
    """Precomputed timeline of one tram trip along its track."""

    line: TransitLine
    track_id: str
    archetype_id: int
    spawn_time: float
    # per stop: (arrival time, departure time, arc position)
    stop_times: list[tuple[float, float, float]]
    end_time: float
    track_length: float

    def position_arc(self, t: float) -> float:
        """Arc position at absolute time t (piecewise linear between stops)."""
        first_arr, _, first_arc = self.stop_times[0]
        if t <= first_arr:
            if first_arr <= self.spawn_time:
                return first_arc
            frac = (t - self.spawn_time) / (first_arr - self.spawn_time)
            return first_arc * max(0.0, frac)
        for i, (arr, dep, arc) in enumerate(self.stop_times):
            if t <= dep:
                return arc
            if i + 1 < len(self.stop_times):
                narr, _, narc = self.stop_times[i + 1]
                if t <= narr:
                    frac = (t - dep) / (narr - dep)
                    return arc + (narc - arc) * frac
            else:
                last_arr, last_dep, last_arc = self.stop_times[-1]
                frac = (t - last_dep) / max(1e-9, self.end_time - last_dep)
                return last_arc + (self.track_length - last_arc) * min(1.0, frac)
        return self.track_length


def build_tram_runs(
    schedule: TransitSchedule,
    geo_rt,
    catalog: ArchetypeCatalog,
    horizon: float,
) -> list[TramRun]:
    """All tram trips with any activity in [0, horizon), spawn-time ordered."""
    runs: list[TramRun] = []
    for li, line in enumerate(sorted(schedule.lines, key=lambda l: l.id)):
        track = geo_rt.track_for_line(line)
        arch_idx = li % len(catalog.trams)
        arch = catalog.trams[arch_idx]
        stop_arcs = [geo_rt.stop_arc(track, s) for s in line.stops]
        approach = stop_arcs[0] / arch.max_speed
        tail = (geo_rt.track_length(track) - stop_arcs[-1]) / arch.max_speed
        for off in sorted(line.offsets):
            k = 0
            while True:
                first_arrival = off + k * line.period
                spawn_time = first_arrival - approach
                if spawn_time >= horizon:
                    break
                arrivals = [first_arrival]
                for rt in line.run_times:
                    arrivals.append(arrivals[-1] + rt)
                stop_times = [
                    (arr, arr + arch.dwell, arc) for arr, arc in zip(arrivals, stop_arcs)
                ]
                end_time = stop_times[-1][1] + tail
                if end_time >= 0.0:
                    runs.append(
                        TramRun(
                            line=line,
                            track_id=track,
                            archetype_id=arch_idx,
                            spawn_time=spawn_time,
                            stop_times=stop_times,
                            end_time=end_time,
                            track_length=geo_rt.track_length(track),
                        )
                    )
                k += 1
    runs.sort(key=lambda r: (r.spawn_time, r.line.id))
    return runs


def transit_update(world: "WorldState", dt: float) -> None:
    """Spawn scheduled trams, move them, emit arrival/departure events."""
    t_prev = world.tick * world.dt
    t_now = t_prev + dt

    while world.next_tram_run < len(world.tram_runs):
        run = world.tram_runs[world.next_tram_run]
        if run.spawn_time > t_now:
            break
        world.next_tram_run += 1
        if run.end_time <= t_now:
            continue  # fully in the past (possible only with a late start)
        arch = world.catalog.trams[run.archetype_id]
        tram = AgentState(
            id=world.alloc_agent_id(),
            kind=TRAM,
            archetype_id=run.archetype_id,
            level=world.geo.track_level(run.track_id),
            position=world.geo.track_point(run.track_id, run.position_arc(t_now)),
            line_id=run.line.id,
            length=arch.length,
            spawn_time=run.spawn_time,
        )
        world.add_agent(tram)
        world.tram_active[tram.id] = run
        world.emit(
            Event(
                world.tick,
                AGENT_SPAWNED,
                {"agent": tram.id, "agent_kind": TRAM, "archetype": arch.id},
            )
        )

    for tid in sorted(world.tram_active):
        run = world.tram_active[tid]
        tram = world.agents[tid]
        arc_before = run.position_arc(t_prev)
        arc_now = run.position_arc(t_now)
        arch = world.catalog.trams[run.archetype_id]
        tram.position = world.geo.track_point(run.track_id, arc_now)
        tram.speed = min(arch.max_speed, max(0.0, (arc_now - arc_before) / dt))
        for idx, (arr, dep, _) in enumerate(run.stop_times):
            stop_id = run.line.stops[idx]
            if t_prev < arr <= t_now:
                world.emit(
                    Event(
                        world.tick,
                        TRANSIT_ARRIVED,
                        {"line": run.line.id, "stop": stop_id, "agent": tid},
                    )
                )
            if t_prev < dep <= t_now:
                world.emit(
                    Event(
                        world.tick,
                        TRANSIT_DEPARTED,
                        {"line": run.line.id, "stop": stop_id, "agent": tid},
                    )
                )
                world.departed_this_tick.add((run.line.id, stop_id))
        nxt = 0
        while nxt < len(run.stop_times) and run.stop_times[nxt][0] <= t_now:
            nxt += 1
        tram.next_stop_index = nxt
        if nxt > 0:
            _, dep, _ = run.stop_times[nxt - 1]
            tram.dwell_remaining = max(0.0, dep - t_now)
        if t_now >= run.end_time:
            tram.despawn = True
