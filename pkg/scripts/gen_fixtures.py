#!/usr/bin/env python3
"""Author the bundled fixture set: site, tour scenario, schedule, catalog.

Everything is formula-generated so the files are reproducible; run this
script after changing any constant below and commit the regenerated JSON.
The site is a compact two-level tram/road hub: a ground level with two
sidewalks separated by a three-lane road and a tram line, joined by a
signal-controlled crossing, plus an underground platform reached by two
elevators (one broken) and a staircase.
"""

from __future__ import annotations

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "hubsim" / "fixtures"


def rect(x0: float, y0: float, x1: float, y1: float) -> list[list[float]]:
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def poly(fid, level, kind, vertices, props=None, **kw):
    merged = dict(props or {})
    merged.update(kw)
    return {
        "id": fid,
        "level": level,
        "kind": kind,
        "geometry": {"type": "polygon", "vertices": vertices},
        "props": merged,
    }


def line(fid, level, kind, vertices, **props):
    return {
        "id": fid,
        "level": level,
        "kind": kind,
        "geometry": {"type": "polyline", "vertices": vertices},
        "props": props,
    }


def point(fid, level, kind, xy, **props):
    # point-like features are 2-vertex polylines; only vertex 0 is read
    x, y = xy
    return {
        "id": fid,
        "level": level,
        "kind": kind,
        "geometry": {"type": "polyline", "vertices": [[x, y], [x + 0.4, y]]},
        "props": props,
    }


def build_site() -> dict:
    features = [
        # ground level: two sidewalks flanking the road corridor
        poly("walk_south", 0, "walk_surface", rect(10, 64, 140, 71)),
        poly("walk_north", 0, "walk_surface", rect(10, 81, 140, 88)),
        # road: two eastbound lanes (overtaking pair) + one westbound
        line(
            "lane_e1", 0, "road_lane",
            [[5, 73.75], [145, 73.75]],
            speed_limit=13.9, adjacent_lane_id="lane_e2",
        ),
        line(
            "lane_e2", 0, "road_lane",
            [[5, 76.25], [145, 76.25]],
            speed_limit=13.9, adjacent_lane_id="lane_e1",
        ),
        line("lane_w", 0, "road_lane", [[145, 78.75], [5, 78.75]], speed_limit=13.9),
        # ground tram line north of the road
        line("track_g", 0, "tram_track", [[5, 80.5], [145, 80.5]]),
        # the only ground-level way between the sidewalks
        poly("crossing_mid", 0, "crossing", rect(58, 68, 62, 83)),
        # signal heads guarding the crossing (projected onto their lanes)
        point(
            "sig_e1", 0, "signal_head", [57, 73.75],
            lane_id="lane_e1", phases=[["green", 25], ["yellow", 3], ["red", 12]],
            offset=0,
        ),
        point(
            "sig_e2", 0, "signal_head", [57, 76.25],
            lane_id="lane_e2", phases=[["green", 25], ["yellow", 3], ["red", 12]],
            offset=0,
        ),
        point(
            "sig_w", 0, "signal_head", [63, 78.75],
            lane_id="lane_w", phases=[["green", 25], ["yellow", 3], ["red", 12]],
            offset=20,
        ),
        # tactile guiding strips on the south sidewalk; the 8 m gap between
        # strip_main's end and strip_east's start is tour barrier 1
        line("strip_main", 0, "guide_strip", [[20, 68.5], [52, 68.5]]),
        line("strip_east", 0, "guide_strip", [[60, 68.5], [130, 68.5]]),
        # rental scooters dumped across strip_east: tour barrier 2
        poly("scooter_a", 0, "obstacle", rect(87.5, 67.6, 88.3, 69.4), movable=True),
        poly("scooter_b", 0, "obstacle", rect(89.2, 67.8, 90.0, 69.6), movable=True),
        poly("scooter_c", 0, "obstacle", rect(90.9, 67.5, 91.7, 69.3), movable=True),
        # ground tram stop on the north sidewalk edge
        poly("stop_g", 0, "stop", rect(64, 80, 76, 84), line_ids=["line_g"]),
        # vertical connectors; the east elevator is out of order (barrier 3)
        poly(
            "elev_e", 0, "connector", rect(98.5, 82.5, 101.5, 85.5),
            props={"kind": "elevator", "connects": [0, -1], "operational": False},
        ),
        poly(
            "elev_w", 0, "connector", rect(38.5, 82.5, 41.5, 85.5),
            props={"kind": "elevator", "connects": [0, -1], "operational": True},
        ),
        poly(
            "stairs_mid", 0, "connector", rect(68.5, 82.5, 71.5, 85.5),
            props={"kind": "stairs", "connects": [0, -1], "operational": True},
        ),
        # underground platform and line
        poly("walk_platform", -1, "walk_surface", rect(30, 76, 110, 92)),
        line("track_u", -1, "tram_track", [[5, 77], [145, 77]]),
        poly("stop_u", -1, "stop", rect(55, 75.5, 85, 80), line_ids=["line_u"]),
        # traffic sources
        point(
            "sp_veh_e1", 0, "spawn_point", [5, 73.75],
            agent_kind="vehicle", lane_id="lane_e1", rate=0.04,
        ),
        point(
            "sp_veh_e2", 0, "spawn_point", [5, 76.25],
            agent_kind="vehicle", lane_id="lane_e2", rate=0.03,
        ),
        point(
            "sp_veh_w", 0, "spawn_point", [145, 78.75],
            agent_kind="vehicle", lane_id="lane_w", rate=0.04,
        ),
        point(
            "sp_ped_w", 0, "spawn_point", [12, 67],
            agent_kind="pedestrian", rate=0.05, goal_ids=["sp_ped_e", "stop_g"],
        ),
        point(
            "sp_ped_e", 0, "spawn_point", [138, 67],
            agent_kind="pedestrian", rate=0.05, goal_ids=["sp_ped_w", "stop_g"],
        ),
        point(
            "sp_ped_n", 0, "spawn_point", [12, 85],
            agent_kind="pedestrian", rate=0.03, goal_ids=["sp_ped_ne", "stop_g"],
        ),
        point(
            "sp_ped_ne", 0, "spawn_point", [138, 85],
            agent_kind="pedestrian", rate=0.03, goal_ids=["sp_ped_n", "stop_g"],
        ),
        point(
            "sp_ped_u", -1, "spawn_point", [32, 88],
            agent_kind="pedestrian", rate=0.04, goal_ids=["stop_u"],
        ),
        point(
            "sp_cyc", 0, "spawn_point", [138, 65],
            agent_kind="cyclist", rate=0.01, goal_ids=["sp_ped_w"],
        ),
    ]
    return {
        "name": "durlacher-tor-mini",
        "format_version": 1,
        "bounds": {"w": 150, "h": 150},
        "levels": [0, -1],
        "features": features,
    }


def build_scenario() -> dict:
    return {
        "version": 1,
        "start_pose": {"level": 0, "position": [25, 67], "heading": 90},
        "barriers": [
            {
                "id": "b1_strip",
                "kind": "interrupted_guide_strip",
                "level": 0,
                "trigger": {"center": [52, 68.5], "radius": 3.0},
                "highlight": {
                    "marker_anchor": [52, 68.5, 2.5],
                    "cue_radius": 8.0,
                },
                "info_text": (
                    "The tactile guiding strip ends abruptly here. People who "
                    "rely on it with a cane lose their line of orientation in "
                    "the middle of the sidewalk."
                ),
                "resolution": {
                    "kind": "AddGuideStripSegment",
                    "strip_id": "strip_main",
                    "polyline": [[52, 68.5], [60, 68.5]],
                },
            },
            {
                "id": "b2_scooters",
                "kind": "cluttered_sidewalk",
                "level": 0,
                "trigger": {"center": [84, 68.5], "radius": 3.0},
                "highlight": {
                    "marker_anchor": [84, 68.5, 2.5],
                    "cue_radius": 8.0,
                },
                "info_text": (
                    "Rental scooters are parked across the guiding strip. They "
                    "are an unexpected obstacle for blind people and block "
                    "wheelchair users' clear width."
                ),
                "resolution": {
                    "kind": "ClearObstacles",
                    "obstacle_ids": ["scooter_a", "scooter_b", "scooter_c"],
                    "displacements": [[0, -2.2], [0, -2.2], [0, -2.2]],
                    "duration": 2.0,
                },
            },
            {
                "id": "b3_elevator",
                "kind": "broken_elevator",
                "level": -1,
                "trigger": {"center": [96, 84], "radius": 3.0},
                "highlight": {
                    "marker_anchor": [96, 84, 2.5],
                    "cue_radius": 8.0,
                },
                "info_text": (
                    "This elevator is out of service. Without it, wheelchair "
                    "users cannot leave the platform here; the signposted "
                    "route to the west elevator is the only step-free way up."
                ),
                "resolution": {
                    "kind": "ActivateArrowGuides",
                    "broken_connector_id": "elev_e",
                    "alternative_connector_id": "elev_w",
                },
            },
        ],
    }


def build_schedule() -> dict:
    return {
        "lines": [
            # both lines keep headways inside the 5-10 minute band
            {"id": "line_g", "stops": ["stop_g"], "offsets": [30], "period": 420,
             "run_times": []},
            {"id": "line_u", "stops": ["stop_u"], "offsets": [90], "period": 360,
             "run_times": []},
        ]
    }


def build_catalog() -> dict:
    pedestrians = []
    for i in range(107):
        pedestrians.append(
            {
                "id": f"ped{i:03d}",
                "walk_speed": round(1.0 + 0.8 * i / 106, 4),
                "radius": round(0.25 + 0.15 * ((i * 7) % 107) / 106, 4),
            }
        )
    vehicles = []
    for i in range(19):
        vehicles.append(
            {
                "id": f"car{i:02d}",
                "length": round(3.5 + 2.5 * i / 18, 4),
                "max_speed": round(5.5 + 8.5 * i / 18, 4),
                "accel": round(2.2 + 0.8 * ((i * 5) % 19) / 18, 4),
                "decel": round(4.0 + 1.5 * ((i * 3) % 19) / 18, 4),
            }
        )
    trams = [
        {"id": "tram_long", "length": 30.0, "max_speed": 10.0, "dwell": 20.0},
        {"id": "tram_short", "length": 22.0, "max_speed": 9.0, "dwell": 25.0},
    ]
    cyclists = [
        {"id": f"cyc{i}", "walk_speed": round(2.5 + 2.5 * i / 5, 4), "radius": 0.35}
        for i in range(6)
    ]
    return {
        "pedestrians": pedestrians,
        "vehicles": vehicles,
        "trams": trams,
        "cyclists": cyclists,
    }


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    docs = {
        "durlacher-tor-mini.site.json": build_site(),
        "tour.json": build_scenario(),
        "schedule.json": build_schedule(),
        "catalog.json": build_catalog(),
    }
    for name, doc in docs.items():
        path = OUT / name
        path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
