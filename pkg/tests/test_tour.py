"""Barrier tour: scenario validation, phase machine, and world mutations."""

from __future__ import annotations

import json

import pytest

from hubsim import geometry as geo
from hubsim.errors import (
    AlreadyApplied,
    AlternativeUnavailable,
    DanglingReference,
    MalformedDocument,
    StartPoseInvalid,
    UnreachableBarrier,
)
from hubsim.events import (
    BARRIER_APPROACHED,
    BARRIER_RESOLVED,
    PARTICLE_CUE,
    TOUR_COMPLETED,
)
from hubsim.agents import TransitSchedule
from hubsim.simcore import init_world, neutral_frame, step
from hubsim.sitemodel import load_site
from hubsim.tour import (
    APPROACHED,
    GUIDED,
    RESOLVED,
    apply_resolution,
    ensure_scenario_valid,
    load_scenario,
    validate_scenario,
)

from conftest import feature, rect, site_bytes, site_doc


def scenario_bytes(doc) -> bytes:
    return json.dumps(doc).encode()


def reload_with(scenario_raw, fn):
    doc = json.loads(scenario_raw)
    fn(doc)
    return load_scenario(scenario_bytes(doc))


# --- loading and validation ----------------------------------------------------


class TestScenarioLoading:
    def test_fixture_clean(self, scenario, site):
        assert validate_scenario(scenario, site) == []
        assert [b.kind for b in scenario.barriers] == [
            "interrupted_guide_strip",
            "cluttered_sidewalk",
            "broken_elevator",
        ]
        assert all(b.info_text for b in scenario.barriers)

    def test_not_json(self):
        with pytest.raises(MalformedDocument):
            load_scenario(b"{nope")

    def test_unknown_mutation_kind(self, scenario_raw):
        with pytest.raises(MalformedDocument, match="mutation kind"):
            reload_with(
                scenario_raw,
                lambda d: d["barriers"][0]["resolution"].update(kind="Teleport"),
            )

    def test_heading_not_multiple_of_45(self, scenario_raw, site):
        sc = reload_with(scenario_raw, lambda d: d["start_pose"].update(heading=30))
        assert any("multiple of 45" in p for p in validate_scenario(sc, site))

    def test_unknown_barrier_kind(self, scenario_raw, site):
        sc = reload_with(scenario_raw, lambda d: d["barriers"][0].update(kind="pothole"))
        assert any("unknown kind" in p for p in validate_scenario(sc, site))

    def test_duplicate_barrier_id(self, scenario_raw, site):
        sc = reload_with(
            scenario_raw, lambda d: d["barriers"][1].update(id=d["barriers"][0]["id"])
        )
        assert any("duplicate" in p for p in validate_scenario(sc, site))

    def test_cue_radius_smaller_than_trigger(self, scenario_raw, site):
        sc = reload_with(
            scenario_raw, lambda d: d["barriers"][0]["highlight"].update(cue_radius=1.0)
        )
        assert any("cue_radius" in p for p in validate_scenario(sc, site))

    def test_marker_anchor_too_far(self, scenario_raw, site):
        sc = reload_with(
            scenario_raw,
            lambda d: d["barriers"][0]["highlight"].update(marker_anchor=[90, 68.5, 2.5]),
        )
        assert any("marker anchor" in p for p in validate_scenario(sc, site))

    def test_trigger_off_surface(self, scenario_raw, site):
        sc = reload_with(
            scenario_raw, lambda d: d["barriers"][0]["trigger"].update(center=[52, 40])
        )
        assert any("not on a walkable surface" in p for p in validate_scenario(sc, site))

    def test_missing_strip_reference(self, scenario_raw, site):
        sc = reload_with(
            scenario_raw,
            lambda d: d["barriers"][0]["resolution"].update(strip_id="ghost"),
        )
        assert any("no guide strip" in p for p in validate_scenario(sc, site))
        with pytest.raises(DanglingReference):
            ensure_scenario_valid(sc, site)

    def test_missing_obstacle_reference(self, scenario_raw, site):
        sc = reload_with(
            scenario_raw,
            lambda d: d["barriers"][1]["resolution"].update(obstacle_ids=["ghost"] * 3),
        )
        with pytest.raises(DanglingReference):
            ensure_scenario_valid(sc, site)

    def test_non_operational_alternative(self, scenario_raw, site):
        # swap the connectors: the broken one is offered as the alternative
        def swap(d):
            res = d["barriers"][2]["resolution"]
            res["broken_connector_id"], res["alternative_connector_id"] = (
                res["alternative_connector_id"],
                res["broken_connector_id"],
            )

        sc = reload_with(scenario_raw, swap)
        assert any("is not operational" in p for p in validate_scenario(sc, site))
        with pytest.raises(AlternativeUnavailable):
            ensure_scenario_valid(sc, site)


class TestInitErrors:
    def test_unreachable_barrier_names_it(self, scenario, catalog):
        # an island surface holds the first barrier's trigger out of reach
        feats = [
            feature("main", 0, "walk_surface", "polygon", rect(0, 0, 30, 30)),
            feature("island", 0, "walk_surface", "polygon", rect(40, 0, 55, 30)),
            feature("strip_main", 0, "guide_strip", "polyline", [[2, 5], [20, 5]]),
        ]
        island_site = load_site(site_bytes(site_doc(feats, bounds=(60, 60))))
        sc_doc = {
            "version": 1,
            "start_pose": {"level": 0, "position": [5, 5], "heading": 0},
            "barriers": [
                {
                    "id": "b_far",
                    "kind": "interrupted_guide_strip",
                    "level": 0,
                    "trigger": {"center": [47, 15], "radius": 3.0},
                    "resolution": {
                        "kind": "AddGuideStripSegment",
                        "strip_id": "strip_main",
                        "polyline": [[20, 5], [25, 5]],
                    },
                }
            ],
        }
        island_scenario = load_scenario(scenario_bytes(sc_doc))
        empty_schedule = TransitSchedule(())
        with pytest.raises(UnreachableBarrier, match="b_far"):
            init_world(island_site, island_scenario, empty_schedule, 0, catalog)

    def test_start_pose_off_surface(self, site, scenario_raw, schedule, catalog):
        sc = reload_with(scenario_raw, lambda d: d["start_pose"].update(position=[2, 2]))
        with pytest.raises(StartPoseInvalid):
            init_world(site, sc, schedule, 0, catalog)


# --- phase machine ---------------------------------------------------------------


class TestPhaseMachine:
    def test_cue_then_trigger_then_resolve(self, make_world):
        w = make_world()
        b1 = w.tour.barriers[0]
        # stand between cue and trigger radii
        w.avatar.position = (b1.trigger_center[0] - 5.0, b1.trigger_center[1])
        events = step(w, neutral_frame(w.tick))
        cues = [e for e in events if e.kind == PARTICLE_CUE]
        assert len(cues) == 1
        assert cues[0].payload["barrier"] == b1.id
        assert cues[0].payload["radius"] == b1.cue_radius
        assert w.tour.phases[0] == GUIDED and w.tour.cued[0]

        # lingering in the cue band must not re-fire the cue
        assert not [
            e for e in step(w, neutral_frame(w.tick)) if e.kind == PARTICLE_CUE
        ]

        w.avatar.position = b1.trigger_center
        events = step(w, neutral_frame(w.tick))
        kinds = [e.kind for e in events if e.kind.startswith("Barrier")]
        assert kinds == [BARRIER_APPROACHED, BARRIER_RESOLVED]
        assert w.tour.phases[0] == RESOLVED
        assert w.tour.target_index == 1

    def test_approached_payload(self, make_world):
        w = make_world()
        b1 = w.tour.barriers[0]
        w.avatar.position = b1.trigger_center
        events = step(w, neutral_frame(w.tick))
        (appr,) = [e for e in events if e.kind == BARRIER_APPROACHED]
        assert appr.payload["barrier"] == b1.id
        assert appr.payload["info_text"] == b1.info_text
        assert appr.payload["via_interact"] is False

    def test_completion_emitted_once(self, make_world):
        w = make_world()
        for b in w.tour.barriers:
            w.avatar.level = b.level
            w.avatar.position = b.trigger_center
            events = step(w, neutral_frame(w.tick))
        assert [e.kind for e in events if e.kind == TOUR_COMPLETED] == [TOUR_COMPLETED]
        assert w.tour.completed
        for _ in range(10):
            events = step(w, neutral_frame(w.tick))
            assert not [e for e in events if e.kind == TOUR_COMPLETED]

    def test_wrong_level_does_not_trigger(self, make_world):
        w = make_world()
        b3 = w.tour.barriers[2]
        assert b3.level == -1
        w.tour.target_index = 2
        w.avatar.position = b3.trigger_center  # still on level 0
        events = step(w, neutral_frame(w.tick))
        assert not [e for e in events if e.kind.startswith("Barrier")]
        assert w.tour.phases[2] == GUIDED

    def test_resolution_order_is_scenario_order(self, make_world):
        w = make_world()
        resolved = []
        for b in w.tour.barriers:
            w.avatar.level = b.level
            w.avatar.position = b.trigger_center
            for e in step(w, neutral_frame(w.tick)):
                if e.kind == BARRIER_RESOLVED:
                    resolved.append(e.payload["barrier"])
        assert resolved == [b.id for b in w.tour.barriers]

    def test_out_of_order_visit_ignored(self, make_world):
        w = make_world()
        b2 = w.tour.barriers[1]
        w.avatar.position = b2.trigger_center  # b1 is still the target
        events = step(w, neutral_frame(w.tick))
        assert not [e for e in events if e.kind == BARRIER_RESOLVED]
        assert w.tour.target_index == 0


# --- mutations ---------------------------------------------------------------


class TestStripMutation:
    def test_segment_appended_and_gap_closed(self, make_world):
        w = make_world()
        b1 = w.tour.barriers[0]
        before = w.geo.strip_centerline("strip_main")
        apply_resolution(b1, w)
        after = w.geo.strip_centerline("strip_main")
        assert len(after) == len(before) + 1
        assert after[-1] == b1.resolution.polyline

    def test_already_applied(self, make_world):
        w = make_world()
        b1 = w.tour.barriers[0]
        apply_resolution(b1, w)
        with pytest.raises(AlreadyApplied):
            apply_resolution(b1, w)

    def test_mutation_recorded(self, make_world):
        w = make_world()
        rec = apply_resolution(w.tour.barriers[0], w)
        assert rec.barrier_id == "b1_strip"
        assert rec.kind == "AddGuideStripSegment"
        assert w.mutations_applied == [rec]


class TestClearObstacles:
    def test_linear_animation_over_40_ticks(self, make_world):
        w = make_world()
        b2 = w.tour.barriers[1]
        res = b2.resolution
        duration_ticks = round(res.duration / w.dt)
        assert duration_ticks == 40

        base = {oid: w.geo.obstacle_polygon(oid) for oid in res.obstacle_ids}
        apply_resolution(b2, w)
        # the resolution tick itself: animation is armed but not yet advanced
        step(w, neutral_frame(w.tick))
        assert all(w.geo.obstacle_offsets[oid] == (0.0, 0.0) for oid in res.obstacle_ids)
        for k in range(1, duration_ticks + 1):
            step(w, neutral_frame(w.tick))
            frac = k / duration_ticks
            for oid, (dx, dy) in zip(res.obstacle_ids, res.displacements):
                got = w.geo.obstacle_offsets[oid]
                assert got == pytest.approx((dx * frac, dy * frac), abs=1e-12), (oid, k)
        # settled: a further tick must not move anything
        step(w, neutral_frame(w.tick))
        for oid, (dx, dy) in zip(res.obstacle_ids, res.displacements):
            assert w.geo.obstacle_offsets[oid] == pytest.approx((dx, dy))
            moved = w.geo.obstacle_polygon(oid)
            for (gx, gy), (bx, by) in zip(moved, base[oid]):
                assert (gx, gy) == pytest.approx((bx + dx, by + dy))

    def test_walkability_restored_after_animation(self, make_world):
        w = make_world()
        b2 = w.tour.barriers[1]
        blocked_before = w.geo.blocked_nodes
        assert blocked_before, "scooters must block walk nodes at start"
        apply_resolution(b2, w)
        for _ in range(41):
            step(w, neutral_frame(w.tick))
        moved_polys = [w.geo.obstacle_polygon(oid) for oid in b2.resolution.obstacle_ids]
        for nid in w.geo.blocked_nodes:
            _lv, pos = w.geo.walk_graph.nodes[nid]
            assert any(geo.point_in_polygon(pos, p) for p in moved_polys)
        for nid in blocked_before - w.geo.blocked_nodes:
            _lv, pos = w.geo.walk_graph.nodes[nid]
            assert not any(geo.point_in_polygon(pos, p) for p in moved_polys)


class TestArrowGuides:
    def test_guides_connect_broken_to_alternative(self, make_world):
        w = make_world()
        b3 = w.tour.barriers[2]
        res = b3.resolution
        apply_resolution(b3, w)
        path = w.arrow_guides[b3.id]
        assert len(path) >= 2
        broken_node = w.geo.connector_node(res.broken_connector_id, b3.level)
        alt_node = w.geo.connector_node(res.alternative_connector_id, b3.level)
        start_lv, start_pos = path[0]
        end_lv, end_pos = path[-1]
        assert geo.dist(start_pos, w.geo.walk_graph.nodes[broken_node][1]) <= 1.0
        assert geo.dist(end_pos, w.geo.walk_graph.nodes[alt_node][1]) <= 1.0
        assert start_lv == end_lv == b3.level

    def test_guided_path_to_b3_avoids_broken_elevator(self, make_world, site):
        w = make_world()
        w.tour.target_index = 2
        w.tour._last_start_node = -1
        step(w, neutral_frame(w.tick))
        path = w.tour.guided_path
        assert path, "a guided path to the level -1 barrier must exist"
        assert path[-1][0] == -1
        broken = site.feature("elev_e")
        for (lv_a, pa), (lv_b, pb) in zip(path, path[1:]):
            if lv_a != lv_b:  # a connector hop: neither end may sit in elev_e
                assert not geo.point_in_polygon(pa, broken.vertices)
                assert not geo.point_in_polygon(pb, broken.vertices)
