"""Authoritative WebSocket gateway.

One session drives one world: the client sends input frames, the server
steps the simulation at 20 Hz wall time and streams a delta every tick plus
a full snapshot every 100th. The world never leaves this process; clients
only ever see snapshots. Sessions opened with `?turbo=1` step on explicit
`{"t":"tick","n":k}` messages instead of the wall clock, which is how the
test suite drives deterministic end-to-end runs without sleeping.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import simcore
from .agents import ArchetypeCatalog, TransitSchedule
from .avatar import clamp_move
from .errors import DecodeError
from .events import Event
from .sitemodel import SiteMap
from .simcore import InputFrame, WorldState, neutral_frame, snapshot, state_hash, step
from .tour import BarrierScenario

PROTO_VERSION = 1
TICK_HZ = 20
INPUT_QUEUE_MAX = 8
FULL_SNAPSHOT_EVERY = 100
CATCHUP_MAX = 5  # ticks stepped per wakeup when behind the wall clock


def encode_msg(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def decode_msg(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(exc.pos, str(exc)) from exc
    if not isinstance(obj, dict):
        raise DecodeError(0, "frame must be a JSON object")
    return obj


def make_delta(prev: dict, curr: dict, events: list[Event]) -> dict:
    """Incremental wire message; applying it to prev reproduces curr."""
    prev_agents = {a["id"]: a for a in prev["agents"]}
    curr_agents = {a["id"]: a for a in curr["agents"]}
    changed = [a for a in curr["agents"] if prev_agents.get(a["id"]) != a]
    removed = [aid for aid in prev_agents if aid not in curr_agents]
    removed.sort()
    delta: dict = {
        "t": "delta",
        "tick": curr["tick"],
        "changed_agents": changed,
        "removed_agent_ids": removed,
        "events": [e.to_json_obj() for e in events],
    }
    if curr["avatar"] != prev["avatar"]:
        delta["avatar"] = curr["avatar"]
    if curr["tour"] != prev["tour"]:
        delta["tour"] = curr["tour"]
    if curr["signals"] != prev["signals"]:
        delta["signals"] = curr["signals"]
    if curr["mutations"] != prev["mutations"]:
        delta["mutations"] = curr["mutations"]
    return delta


def apply_delta(snap: dict, delta: dict) -> dict:
    """Pure client-side reconstruction step (reference implementation)."""
    agents = {a["id"]: a for a in snap["agents"]}
    for a in delta["changed_agents"]:
        agents[a["id"]] = a
    for aid in delta["removed_agent_ids"]:
        agents.pop(aid, None)
    return {
        "tick": delta["tick"],
        "full": True,
        "avatar": delta.get("avatar", snap["avatar"]),
        "agents": [agents[k] for k in sorted(agents)],
        "signals": delta.get("signals", snap["signals"]),
        "tour": delta.get("tour", snap["tour"]),
        "mutations": delta.get("mutations", snap["mutations"]),
    }


@dataclass
class Session:
    id: str
    world: WorldState
    queue: list[InputFrame] = field(default_factory=list)
    dropped: int = 0
    prev_snapshot: Optional[dict] = None
    replay_log: list[InputFrame] = field(default_factory=list)
    checkpoints: list[tuple[int, int]] = field(default_factory=list)
    turbo: bool = False

    def push_input(self, frame: InputFrame) -> bool:
        """Queue a frame; True if the bounded queue dropped its oldest."""
        self.queue.append(frame)
        if len(self.queue) > INPUT_QUEUE_MAX:
            del self.queue[0]
            self.dropped += 1
            return True
        return False

    def step_once(self) -> list[dict]:
        """Consume one input (or a neutral frame), step, build wire messages."""
        world = self.world
        if world.tick % FULL_SNAPSHOT_EVERY == 0:
            self.checkpoints.append((world.tick, state_hash(world)))
        if self.queue:
            frame = self.queue.pop(0)
            frame = InputFrame(world.tick, frame.move, frame.rot, frame.act)
        else:
            frame = neutral_frame(world.tick)
        self.replay_log.append(frame)
        events = step(world, frame)
        curr = snapshot(world)
        out = [make_delta(self.prev_snapshot, curr, events)]
        if world.tick % FULL_SNAPSHOT_EVERY == 0:
            out.append(dict(curr, t="snapshot"))
        self.prev_snapshot = curr
        return out


class Gateway:
    """Holds the loaded documents and spawns one world per session."""

    def __init__(
        self,
        site_raw: bytes,
        scenario_raw: bytes,
        schedule: TransitSchedule,
        catalog: ArchetypeCatalog,
        site: SiteMap,
        scenario: BarrierScenario,
        seed: int = 0,
    ):
        self.site_raw = site_raw
        self.scenario_raw = scenario_raw
        self.schedule = schedule
        self.catalog = catalog
        self.site = site
        self.scenario = scenario
        self.seed = seed
        self.site_digest = hashlib.sha256(site_raw).hexdigest()
        self.scenario_digest = hashlib.sha256(scenario_raw).hexdigest()
        self.sessions: dict[str, Session] = {}
        self._session_counter = 0
        self.last_session: Optional[Session] = None

    def open_session(self, turbo: bool) -> Session:
        self._session_counter += 1
        sid = f"s{self._session_counter}"
        world = simcore.init_world(
            self.site, self.scenario, self.schedule, self.seed, self.catalog
        )
        sess = Session(id=sid, world=world, turbo=turbo)
        sess.prev_snapshot = snapshot(world)
        self.sessions[sid] = sess
        self.last_session = sess
        return sess

    def close_session(self, sess: Session) -> None:
        self.sessions.pop(sess.id, None)


def _error(code: str, message: str) -> str:
    return encode_msg({"t": "error", "code": code, "message": message})


def _parse_input(obj: dict, tick: int) -> InputFrame:
    move = obj.get("move", [0.0, 0.0])
    mx, my = clamp_move((float(move[0]), float(move[1])))
    raw_rot = float(obj.get("rot", 0))
    rot = 1 if raw_rot > 0 else (-1 if raw_rot < 0 else 0)
    return InputFrame(
        tick=int(obj.get("tick", tick)),
        move=(mx, my),
        rot=rot,
        act=bool(obj.get("act", False)),
    )


def create_app(gateway: Gateway, static_dir: Optional[str] = None) -> FastAPI:
    from fastapi import Response

    app = FastAPI(title="hubsim gateway")
    app.state.gateway = gateway

    @app.get("/health")
    def health() -> dict:
        tick = gateway.last_session.world.tick if gateway.last_session else 0
        return {"ok": True, "tick": tick}

    @app.get("/site")
    def site() -> Response:
        return Response(content=gateway.site_raw, media_type="application/json")

    @app.get("/scenario")
    def scenario() -> Response:
        return Response(content=gateway.scenario_raw, media_type="application/json")

    @app.websocket("/session")
    async def session_ws(ws: WebSocket, turbo: int = 0) -> None:
        await ws.accept()
        sess: Optional[Session] = None
        try:
            sess = await _handshake(ws, gateway, bool(turbo))
            if sess is None:
                return
            if sess.turbo:
                await _turbo_loop(ws, sess)
            else:
                await _realtime_loop(ws, sess)
        except WebSocketDisconnect:
            pass
        finally:
            if sess is not None:
                gateway.close_session(sess)

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app


async def _handshake(ws: WebSocket, gateway: Gateway, turbo: bool) -> Optional[Session]:
    while True:
        try:
            obj = decode_msg(await ws.receive_text())
        except DecodeError as exc:
            await ws.send_text(_error("DECODE", f"offset {exc.offset}: {exc.reason}"))
            continue
        t = obj.get("t")
        if t != "hello":
            await ws.send_text(_error("PROTO", "expected hello"))
            continue
        if obj.get("proto") != PROTO_VERSION:
            await ws.send_text(
                _error("PROTO", f"protocol {obj.get('proto')!r}, want {PROTO_VERSION}")
            )
            continue
        sess = gateway.open_session(turbo)
        await ws.send_text(
            encode_msg(
                {
                    "t": "welcome",
                    "session": sess.id,
                    "tick_hz": TICK_HZ,
                    "site_digest": gateway.site_digest,
                    "scenario_digest": gateway.scenario_digest,
                }
            )
        )
        await ws.send_text(encode_msg(dict(sess.prev_snapshot, t="snapshot")))
        return sess


async def _handle_message(ws: WebSocket, sess: Session, text: str) -> None:
    try:
        obj = decode_msg(text)
    except DecodeError as exc:
        await ws.send_text(_error("DECODE", f"offset {exc.offset}: {exc.reason}"))
        return
    t = obj.get("t")
    if t == "input":
        try:
            frame = _parse_input(obj, sess.world.tick)
        except (TypeError, ValueError, IndexError) as exc:
            await ws.send_text(_error("DECODE", f"bad input frame: {exc}"))
            return
        if sess.push_input(frame):
            await ws.send_text(
                _error(
                    "INPUT_DROPPED",
                    f"input queue full, oldest frame dropped ({sess.dropped} total)",
                )
            )
    elif t == "ping":
        await ws.send_text(encode_msg({"t": "pong", "ts": obj.get("ts")}))
    elif t == "resync":
        await ws.send_text(encode_msg(dict(sess.prev_snapshot, t="snapshot")))
    elif t == "tick":
        if not sess.turbo:
            await ws.send_text(_error("UNSUPPORTED", "tick driving needs turbo mode"))
            return
        n = int(obj.get("n", 1))
        for _ in range(max(0, min(n, 100_000))):
            for msg in sess.step_once():
                await ws.send_text(encode_msg(msg))
    elif t == "hello":
        await ws.send_text(_error("PROTO", "session already established"))
    else:
        await ws.send_text(_error("UNSUPPORTED", f"unknown message type {t!r}"))


async def _turbo_loop(ws: WebSocket, sess: Session) -> None:
    while True:
        await _handle_message(ws, sess, await ws.receive_text())


async def _realtime_loop(ws: WebSocket, sess: Session) -> None:
    loop = asyncio.get_running_loop()
    tick_period = 1.0 / TICK_HZ
    next_deadline = loop.time() + tick_period
    while True:
        timeout = next_deadline - loop.time()
        if timeout > 0:
            try:
                text = await asyncio.wait_for(ws.receive_text(), timeout)
                await _handle_message(ws, sess, text)
                continue
            except asyncio.TimeoutError:
                pass
        stepped = 0
        while loop.time() >= next_deadline and stepped < CATCHUP_MAX:
            for msg in sess.step_once():
                await ws.send_text(encode_msg(msg))
            next_deadline += tick_period
            stepped += 1
        if stepped >= CATCHUP_MAX and loop.time() >= next_deadline:
            # hopelessly behind; drop the backlog instead of spiraling
            next_deadline = loop.time() + tick_period
