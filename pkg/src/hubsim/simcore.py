"""World state and the fixed-rate deterministic tick loop.

One tick is 50 ms of simulated time. Every tick runs the same phase order:
spawning, signals, transit, vehicles, pedestrians, the avatar, the tour
(with its mutation animations), then despawns. All randomness comes from a
single seeded PRNG consumed in exactly that order, which makes any run
reproducible from (seed, input log) alone; canonical state hashes recorded
at checkpoints let a replay prove it stayed on the rails.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from . import agents as ag
from .avatar import AvatarState, avatar_step
from .errors import LogGap, MalformedDocument, StartPoseInvalid, TickMismatch
from .events import AGENT_DESPAWNED, Event
from .prng import Xoshiro256StarStar
from .runtime import RuntimeGeometry
from .sitemodel import SiteMap
from .tour import BarrierScenario, MutationRecord, TourState, advance_tour, init_tour

DT = 0.05  # s per tick, constant for the lifetime of a world
TRAM_HORIZON = 86400.0  # s of schedule expanded up front (one simulated day)

_NEIGHBOR_BUCKET = 2.0  # m, pedestrian spatial-hash pitch
AVATAR_RADIUS = 0.3  # m, the avatar's body radius for separation steering


@dataclass
class InputFrame:
    tick: int
    move: tuple[float, float] = (0.0, 0.0)
    rot: int = 0
    act: bool = False

    def to_json_obj(self) -> dict:
        return {
            "tick": self.tick,
            "move": [self.move[0], self.move[1]],
            "rot": self.rot,
            "act": self.act,
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "InputFrame":
        try:
            move = obj.get("move", [0.0, 0.0])
            rot = int(obj.get("rot", 0))
            if rot not in (-1, 0, 1):
                raise ValueError(f"rot {rot} not in {{-1, 0, 1}}")
            return InputFrame(
                tick=int(obj["tick"]),
                move=(float(move[0]), float(move[1])),
                rot=rot,
                act=bool(obj.get("act", False)),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise MalformedDocument(f"input frame: {exc}") from exc


def neutral_frame(tick: int) -> InputFrame:
    return InputFrame(tick=tick)


class WorldState:
    """Everything one running simulation owns. Single-context only."""

    def __init__(
        self,
        site: SiteMap,
        scenario: BarrierScenario,
        schedule: ag.TransitSchedule,
        seed: int,
        catalog: ag.ArchetypeCatalog,
    ):
        self.site = site
        self.scenario = scenario
        self.schedule = schedule
        self.catalog = catalog
        self.dt = DT
        self.tick = 0
        self.rng = Xoshiro256StarStar(seed)
        self.seed = seed
        self.geo = RuntimeGeometry(site)
        self.signals = ag.SignalBank.from_site(site)
        self.agents: dict[int, ag.AgentState] = {}
        self.next_agent_id = 1
        self.event_queue: list[Event] = []
        self.mutations_applied: list[MutationRecord] = []
        self.arrow_guides: dict[str, list[tuple[int, tuple[float, float]]]] = {}
        self.spawn_points = sorted(site.by_kind("spawn_point"), key=lambda f: f.id)
        self.tram_runs = ag.build_tram_runs(schedule, self.geo, catalog, TRAM_HORIZON)
        self.next_tram_run = 0
        self.tram_active: dict[int, ag.TramRun] = {}
        self.departed_this_tick: set[tuple[str, str]] = set()
        self.ped_goal_stops: dict[int, str] = {}
        self.claimed_gaps: set[tuple] = set()
        self.input_act = False
        self._neighbor_hash: dict[tuple[int, int, int], list] = {}

        pose = scenario.start_pose
        if not self.geo.avatar_walkable(pose.level, pose.position, AVATAR_RADIUS):
            raise StartPoseInvalid(
                f"start pose {pose.position} on level {pose.level} is not walkable"
            )
        self.avatar = AvatarState(
            level=pose.level,
            position=pose.position,
            heading=pose.heading % 360,
        )
        self.tour: TourState = init_tour(scenario, self.geo, self.avatar)

    # --- bookkeeping used by the agents module ------------------------------

    def alloc_agent_id(self) -> int:
        aid = self.next_agent_id
        self.next_agent_id += 1
        return aid

    def add_agent(self, a: ag.AgentState) -> None:
        self.agents[a.id] = a

    def emit(self, e: Event) -> None:
        self.event_queue.append(e)

    def has_line(self, line_id: str) -> bool:
        return any(ln.id == line_id for ln in self.schedule.lines)

    def vehicles_on_lane(self, lane_id: str) -> list[ag.AgentState]:
        return [
            a for a in self.agents.values() if a.kind == ag.VEHICLE and a.lane_id == lane_id
        ]

    def _rebuild_neighbor_hash(self) -> None:
        grid: dict[tuple[int, int, int], list] = {}
        pitch = _NEIGHBOR_BUCKET
        for a in self.agents.values():
            if a.kind != ag.PEDESTRIAN:
                continue
            r = self.catalog.ped_archetype(a.archetype_id).radius
            key = (a.level, int(a.position[0] / pitch), int(a.position[1] / pitch))
            grid.setdefault(key, []).append((a.id, a.position, r))
        av = self.avatar
        if av.in_transit_connector is None:
            key = (av.level, int(av.position[0] / pitch), int(av.position[1] / pitch))
            grid.setdefault(key, []).append((-1, av.position, AVATAR_RADIUS))
        self._neighbor_hash = grid

    def nearest_body(
        self, p: ag.AgentState
    ) -> Optional[tuple[tuple[float, float], float]]:
        """Closest other pedestrian/avatar body on p's level, if within ~2 m."""
        pitch = _NEIGHBOR_BUCKET
        ci = int(p.position[0] / pitch)
        cj = int(p.position[1] / pitch)
        best = None
        best_d = float("inf")
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for bid, pos, r in self._neighbor_hash.get((p.level, ci + di, cj + dj), ()):
                    if bid == p.id:
                        continue
                    dx = pos[0] - p.position[0]
                    dy = pos[1] - p.position[1]
                    d = (dx * dx + dy * dy) ** 0.5
                    if d < best_d:
                        best_d = d
                        best = (pos, r)
        return best

    def update_body(self, p: ag.AgentState, old_pos: tuple[float, float]) -> None:
        """Move a pedestrian between spatial-hash buckets after its step."""
        pitch = _NEIGHBOR_BUCKET
        old_key = (p.level, int(old_pos[0] / pitch), int(old_pos[1] / pitch))
        new_key = (p.level, int(p.position[0] / pitch), int(p.position[1] / pitch))
        if old_key == new_key:
            bucket = self._neighbor_hash.get(old_key, [])
            for i, (bid, _, r) in enumerate(bucket):
                if bid == p.id:
                    bucket[i] = (p.id, p.position, r)
                    return
            return
        bucket = self._neighbor_hash.get(old_key, [])
        for i, (bid, _, r) in enumerate(bucket):
            if bid == p.id:
                del bucket[i]
                self._neighbor_hash.setdefault(new_key, []).append((p.id, p.position, r))
                return


def init_world(
    site: SiteMap,
    scenario: BarrierScenario,
    schedule: ag.TransitSchedule,
    seed: int,
    catalog: Optional[ag.ArchetypeCatalog] = None,
) -> WorldState:
    """Fresh world at tick 0: avatar at the scenario start pose, zero agents.

    Inputs are assumed validated (see cli validate / the individual
    validate_* functions); only the start pose is re-checked here because a
    bad pose would corrupt every later tick.
    """
    if catalog is None:
        catalog = load_bundled_catalog()
    return WorldState(site, scenario, schedule, seed, catalog)


def load_bundled_catalog() -> ag.ArchetypeCatalog:
    from importlib import resources

    raw = resources.files("hubsim").joinpath("fixtures/catalog.json").read_bytes()
    return ag.load_catalog(raw)


def step(world: WorldState, inp: InputFrame) -> list[Event]:
    """Advance one tick; returns the events emitted during it."""
    if inp.tick != world.tick:
        raise TickMismatch(f"input tick {inp.tick} != world tick {world.tick}")
    world.event_queue = []
    world.departed_this_tick = set()
    world.claimed_gaps = set()
    world.input_act = bool(inp.act)
    dt = world.dt

    # agent ids are allocated monotonically and the dict is append-only
    # within a tick, so plain iteration order IS ascending-id order
    # 1: spawns
    ag.spawn_tick(world, dt)
    # 2: signals are a pure function of time; nothing to advance
    # 3: transit
    ag.transit_update(world, dt)
    # 4: vehicles, ascending agent id
    for a in list(world.agents.values()):
        if a.kind == ag.VEHICLE and not a.despawn:
            ag.vehicle_step(world, a, dt)
    # 5: pedestrians, ascending agent id
    world._rebuild_neighbor_hash()
    for a in list(world.agents.values()):
        if a.kind == ag.PEDESTRIAN and not a.despawn:
            old = a.position
            ag.pedestrian_step(world, a, dt)
            world.update_body(a, old)
    # 6: avatar
    avatar_step(world.avatar, inp, world.geo, dt)
    # 7: mutation animations, then the tour
    world.geo.advance_animations(world.tick)
    advance_tour(world)
    # 8: despawns, ascending agent id
    doomed = [a for a in world.agents.values() if a.despawn]
    for a in doomed:
        del world.agents[a.id]
        world.tram_active.pop(a.id, None)
        world.ped_goal_stops.pop(a.id, None)
        world.emit(
            Event(
                world.tick,
                AGENT_DESPAWNED,
                {"agent": a.id, "agent_kind": a.kind, "reason": _despawn_reason(a)},
            )
        )

    world.tick += 1
    return list(world.event_queue)


def _despawn_reason(a: ag.AgentState) -> str:
    if a.kind == ag.VEHICLE:
        return "route_end"
    if a.kind == ag.TRAM:
        return "end_of_line"
    if a.waiting_stop:
        return "boarded"
    return "goal"


# --- canonical hashing -------------------------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = struct.Struct("<Q")
_I64 = struct.Struct("<q")

_KIND_CODE = {ag.VEHICLE: 0, ag.PEDESTRIAN: 1, ag.TRAM: 2}
_COLOR_CODE = {"green": 0, "yellow": 1, "red": 2}
_PHASE_CODE = {"Guided": 0, "Approached": 1, "Resolved": 2}


def _q(x: float) -> bytes:
    # micrometer quantization; Python's round is round-half-to-even
    return _I64.pack(round(x * 1e6))


def _s(text: str) -> bytes:
    b = text.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def canonical_bytes(world: WorldState) -> bytes:
    """The documented canonical serialization the state hash is taken over."""
    out = bytearray()
    out += _U64.pack(world.tick)

    av = world.avatar
    out += _I64.pack(av.level)
    out += _q(av.position[0])
    out += _q(av.position[1])
    out += _I64.pack(av.heading)
    out += _q(av.speed_cap)
    out += bytes([1 if av.rot_latch else 0])
    if av.in_transit_connector is None:
        out += b"\x00"
    else:
        fid, remaining = av.in_transit_connector
        out += b"\x01" + _s(fid) + _q(remaining)

    out += _U64.pack(len(world.agents))
    for a in world.agents.values():  # insertion order == ascending id
        out += _U64.pack(a.id)
        out += bytes([_KIND_CODE[a.kind]])
        out += _I64.pack(a.archetype_id)
        out += _I64.pack(a.level)
        out += _q(a.position[0])
        out += _q(a.position[1])
        out += _q(a.speed)
        if a.kind == ag.VEHICLE:
            out += _s(a.lane_id)
            out += _q(a.s)
            out += _q(a.length)
            out += _q(a.desired_speed)
            out += _q(a.blocked_time)
        elif a.kind == ag.PEDESTRIAN:
            out += _I64.pack(a.goal_node)
            out += _q(a.repath_cooldown)
            out += _q(a.stall_time)
            out += _s(a.waiting_stop)
            out += _s(a.waiting_line)
            # the route itself is recomputable from (goal, graph version);
            # hash its shape plus the live waypoint, not the node list
            out += struct.pack("<I", len(a.route))
            out += _I64.pack(a.route_index)
            out += _I64.pack(
                a.route[a.route_index] if a.route_index < len(a.route) else -1
            )
        else:
            out += _s(a.line_id)
            out += _I64.pack(a.next_stop_index)
            out += _q(a.dwell_remaining)

    t_now = world.tick * world.dt
    heads = sorted(world.signals.programs)
    out += _U64.pack(len(heads))
    for head in heads:
        out += _s(head)
        out += bytes([_COLOR_CODE[world.signals.state(head, t_now)]])

    tour = world.tour
    out += _I64.pack(tour.target_index)
    out += bytes([1 if tour.completed else 0])
    for phase, cued in zip(tour.phases, tour.cued):
        out += bytes([_PHASE_CODE[phase], 1 if cued else 0])

    out += _U64.pack(len(world.mutations_applied))
    for m in world.mutations_applied:
        out += _s(m.barrier_id)
        out += _s(m.kind)
        out += _U64.pack(m.tick)

    for fid in sorted(world.geo.obstacle_offsets):
        dx, dy = world.geo.obstacle_offsets[fid]
        out += _s(fid)
        out += _q(dx)
        out += _q(dy)
    return bytes(out)


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def state_hash(world: WorldState) -> int:
    return fnv1a64(canonical_bytes(world))


# --- replay -------------------------------------------------------------


@dataclass(frozen=True)
class ReplayResult:
    ok: bool
    tick: int = -1
    expected: int = 0
    actual: int = 0

    def __bool__(self) -> bool:
        return self.ok


REPLAY_PASS = ReplayResult(ok=True)


def check_log_contiguous(log: list[InputFrame]) -> None:
    for i, frame in enumerate(log):
        if frame.tick != i:
            raise LogGap(f"input log: expected tick {i}, found {frame.tick}")


def run_replay(
    site: SiteMap,
    scenario: BarrierScenario,
    schedule: ag.TransitSchedule,
    seed: int,
    input_log: list[InputFrame],
    checkpoints: Iterable[tuple[int, int]],
    catalog: Optional[ag.ArchetypeCatalog] = None,
) -> ReplayResult:
    """Re-run a recorded session and verify its checkpoint hashes."""
    check_log_contiguous(input_log)
    bytick = {}
    for t, h in checkpoints:
        bytick[int(t)] = int(h)
        if int(t) > len(input_log):
            raise LogGap(f"checkpoint at tick {t} beyond the input log")
    world = init_world(site, scenario, schedule, seed, catalog)
    for t in range(len(input_log) + 1):
        expected = bytick.get(t)
        if expected is not None:
            actual = state_hash(world)
            if actual != expected:
                return ReplayResult(ok=False, tick=t, expected=expected, actual=actual)
        if t < len(input_log):
            step(world, input_log[t])
    return REPLAY_PASS


# --- input-log and checkpoint file IO ---------------------------------------


def read_input_log(raw: Union[bytes, str]) -> list[InputFrame]:
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    frames = []
    for ln, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"input log line {ln}: {exc}") from exc
        frames.append(InputFrame.from_json_obj(obj))
    return frames


def write_input_log(frames: Iterable[InputFrame]) -> str:
    return "".join(json.dumps(f.to_json_obj()) + "\n" for f in frames)


def read_checkpoints(raw: Union[bytes, str]) -> list[tuple[int, int]]:
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    out = []
    for ln, line in enumerate(raw.splitlines(), start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedDocument(f"checkpoint line {ln}: expected tick<TAB>hash")
        try:
            out.append((int(parts[0]), int(parts[1], 16)))
        except ValueError as exc:
            raise MalformedDocument(f"checkpoint line {ln}: {exc}") from exc
    return out


def write_checkpoints(rows: Iterable[tuple[int, int]]) -> str:
    return "".join(f"{t}\t{h:016x}\n" for t, h in rows)


# --- snapshots (wire-facing world view) ---------------------------------------


def _r6(x: float) -> float:
    return round(x, 6)


def snapshot(world: WorldState) -> dict:
    """Full world snapshot, numbers rounded to wire precision."""
    av = world.avatar
    avatar = {
        "level": av.level,
        "pos": [_r6(av.position[0]), _r6(av.position[1])],
        "heading": av.heading,
        "transit": None
        if av.in_transit_connector is None
        else {
            "connector": av.in_transit_connector[0],
            "remaining": _r6(av.in_transit_connector[1]),
        },
    }
    agents = []
    for aid in sorted(world.agents):
        a = world.agents[aid]
        row = {
            "id": a.id,
            "kind": a.kind,
            "archetype": a.archetype_id,
            "level": a.level,
            "pos": [_r6(a.position[0]), _r6(a.position[1])],
            "speed": _r6(a.speed),
        }
        if a.kind == ag.VEHICLE:
            row["lane"] = a.lane_id
            row["s"] = _r6(a.s)
        elif a.kind == ag.TRAM:
            row["line"] = a.line_id
        agents.append(row)
    t_now = world.tick * world.dt
    signals = [
        {"id": head, "color": world.signals.state(head, t_now)}
        for head in sorted(world.signals.programs)
    ]
    tour = {
        "target_index": world.tour.target_index,
        "completed": world.tour.completed,
        "phases": list(world.tour.phases),
        "guided_path": [
            [lv, _r6(p[0]), _r6(p[1])] for lv, p in world.tour.guided_path
        ],
        "arrow_guides": {
            bid: [[lv, _r6(p[0]), _r6(p[1])] for lv, p in chain]
            for bid, chain in sorted(world.arrow_guides.items())
        },
    }
    mutations = [
        {"barrier": m.barrier_id, "kind": m.kind, "tick": m.tick}
        for m in world.mutations_applied
    ]
    return {
        "tick": world.tick,
        "full": True,
        "avatar": avatar,
        "agents": agents,
        "signals": signals,
        "tour": tour,
        "mutations": mutations,
    }
