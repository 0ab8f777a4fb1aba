"""Player avatar: discrete 45-degree rotation, sliding collision, connectors.

The control scheme is joystick-like: the move vector is given in the
avatar's local frame (+y forward, +x right) and rotation arrives as flicks
that step the heading by 45 degrees with an edge-triggered latch, so a held
input turns exactly once. Level changes happen only by standing in an
operational connector footprint, which starts a timed traversal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, TYPE_CHECKING

from . import geometry as geo
from .sitemodel import CONNECTOR_LENGTH

if TYPE_CHECKING:
    from .runtime import RuntimeGeometry

WALK_SPEED_CAP = 1.4  # m/s
OBSTACLE_CLEARANCE = 0.3  # m, body radius kept clear of obstacle footprints

_SIN = {d: math.sin(math.radians(d)) for d in range(0, 360, 45)}
_COS = {d: math.cos(math.radians(d)) for d in range(0, 360, 45)}


@dataclass
class AvatarState:
    level: int
    position: tuple[float, float]
    heading: int  # degrees, multiple of 45; 0 = +y, clockwise positive
    speed_cap: float = WALK_SPEED_CAP
    rot_latch: bool = False
    in_transit_connector: Optional[tuple[str, float]] = None  # (id, remaining s)
    inside_connectors: frozenset[str] = field(default_factory=frozenset)


def local_to_world(move: tuple[float, float], heading: int) -> tuple[float, float]:
    """Rotate an avatar-local vector into world axes for a given heading."""
    mx, my = move
    s = _SIN[heading % 360]
    c = _COS[heading % 360]
    return (my * s + mx * c, my * c - mx * s)


def clamp_move(move: tuple[float, float]) -> tuple[float, float]:
    mx = min(1.0, max(-1.0, move[0]))
    my = min(1.0, max(-1.0, move[1]))
    mag = math.hypot(mx, my)
    if mag > 1.0:
        return (mx / mag, my / mag)
    return (mx, my)


def avatar_step(avatar: AvatarState, inp, geo_rt: "RuntimeGeometry", dt: float) -> None:
    """One input frame: rotate, then translate or ride a connector."""
    rot = int(inp.rot)
    if rot != 0:
        if not avatar.rot_latch:
            avatar.heading = (avatar.heading + rot * 45) % 360
            avatar.rot_latch = True
    else:
        avatar.rot_latch = False

    if avatar.in_transit_connector is not None:
        fid, remaining = avatar.in_transit_connector
        remaining -= dt
        if remaining > 1e-12:
            avatar.in_transit_connector = (fid, remaining)
            return
        to_level, anchor = geo_rt.connector_exit(fid, avatar.level)
        avatar.level = to_level
        avatar.position = anchor
        avatar.in_transit_connector = None
        avatar.inside_connectors = _containing(geo_rt, to_level, anchor)
        return

    move = clamp_move((float(inp.move[0]), float(inp.move[1])))
    disp = geo.vec_scale(local_to_world(move, avatar.heading), avatar.speed_cap * dt)
    if disp != (0.0, 0.0):
        avatar.position = _slide(geo_rt, avatar.level, avatar.position, disp)

    now_inside = _containing(geo_rt, avatar.level, avatar.position)
    entered = now_inside - avatar.inside_connectors
    avatar.inside_connectors = now_inside
    for fid in sorted(entered):
        if not geo_rt.connector_operational(fid):
            continue  # impassable for level change, plain floor otherwise
        kind = geo_rt.site.feature(fid).props["kind"]
        traversal = CONNECTOR_LENGTH[kind] / avatar.speed_cap
        avatar.in_transit_connector = (fid, traversal)
        break


def _slide(
    geo_rt: "RuntimeGeometry",
    level: int,
    pos: tuple[float, float],
    disp: tuple[float, float],
) -> tuple[float, float]:
    """Axis-separated sliding: full move, else x only, else y only, else stay."""
    full = (pos[0] + disp[0], pos[1] + disp[1])
    if geo_rt.avatar_walkable(level, full, OBSTACLE_CLEARANCE):
        return full
    if disp[0] != 0.0:
        x_only = (pos[0] + disp[0], pos[1])
        if geo_rt.avatar_walkable(level, x_only, OBSTACLE_CLEARANCE):
            return x_only
    if disp[1] != 0.0:
        y_only = (pos[0], pos[1] + disp[1])
        if geo_rt.avatar_walkable(level, y_only, OBSTACLE_CLEARANCE):
            return y_only
    return pos


def _containing(
    geo_rt: "RuntimeGeometry", level: int, pos: tuple[float, float]
) -> frozenset[str]:
    inside = set()
    for conn in geo_rt.connectors_touching(level):
        if geo.point_in_polygon(pos, conn.vertices):
            inside.add(conn.id)
    return frozenset(inside)
