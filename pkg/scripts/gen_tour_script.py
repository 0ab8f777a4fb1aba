#!/usr/bin/env python3
"""Drive the avatar through the bundled tour and record the input script.

A small pursuit controller follows the tour's guided path each tick and
writes the resulting per-tick input frames to fixtures/tour-walk.jsonl.
Replaying that file through `hubsim run --script` reproduces the exact same
walk, so the script doubles as the end-to-end fixture for tests.
"""

from __future__ import annotations

import math
import pathlib

from hubsim.agents import load_schedule
from hubsim.avatar import _COS, _SIN
from hubsim.simcore import InputFrame, init_world, neutral_frame, step, write_input_log
from hubsim.sitemodel import load_site
from hubsim.tour import load_scenario

FX = pathlib.Path(__file__).resolve().parent.parent / "src" / "hubsim" / "fixtures"
SEED = 42
LOOKAHEAD = 4  # guided-path vertices (~2 m)
MAX_TICKS = 60000
TAIL_TICKS = 20


def world_to_local(heading: int, v: tuple[float, float]) -> tuple[float, float]:
    s, c = _SIN[heading % 360], _COS[heading % 360]
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


def controller_frame(world) -> InputFrame:
    av = world.avatar
    if av.in_transit_connector is not None:
        return neutral_frame(world.tick)
    path = world.tour.guided_path
    if not path:
        return neutral_frame(world.tick)
    same = [i for i, (lv, _) in enumerate(path) if lv == av.level]
    if not same:
        return neutral_frame(world.tick)
    nearest = min(same, key=lambda i: math.dist(path[i][1], av.position))
    target_i = nearest
    for i in range(nearest, min(nearest + LOOKAHEAD, len(path) - 1) + 1):
        if path[i][0] != av.level:
            break  # steer at the connector entrance, not past it
        target_i = i
    tx, ty = path[target_i][1]
    dx, dy = tx - av.position[0], ty - av.position[1]
    d = math.hypot(dx, dy)
    if d < 0.03:
        return neutral_frame(world.tick)
    mx, my = world_to_local(av.heading, (dx / d, dy / d))
    mx = max(-1.0, min(1.0, mx))
    my = max(-1.0, min(1.0, my))
    return InputFrame(tick=world.tick, move=(mx, my), rot=0, act=False)


def main() -> None:
    site = load_site((FX / "durlacher-tor-mini.site.json").read_bytes())
    scen = load_scenario((FX / "tour.json").read_bytes())
    sched = load_schedule((FX / "schedule.json").read_bytes())
    world = init_world(site, scen, sched, seed=SEED)

    frames: list[InputFrame] = []
    completed_at = None
    milestones = []
    while world.tick < MAX_TICKS:
        frame = controller_frame(world)
        frames.append(frame)
        for ev in step(world, frame):
            if ev.kind in ("BarrierApproached", "BarrierResolved", "TourCompleted"):
                milestones.append((world.tick, ev.kind, ev.payload.get("barrier", "")))
            if ev.kind == "TourCompleted":
                completed_at = world.tick
        if completed_at is not None:
            break
    if completed_at is None:
        raise SystemExit(f"controller failed to finish the tour in {MAX_TICKS} ticks")
    for _ in range(TAIL_TICKS):
        frame = neutral_frame(world.tick)
        frames.append(frame)
        step(world, frame)

    out = FX / "tour-walk.jsonl"
    out.write_text(write_input_log(frames), encoding="utf-8")
    print(f"wrote {out} ({len(frames)} frames, completed at tick {completed_at})")
    for t, kind, barrier in milestones:
        print(f"  t={t:5d} {kind} {barrier}")


if __name__ == "__main__":
    main()
