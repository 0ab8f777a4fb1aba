"""Signals, transit schedule, catalog ranges, spawning, and road traffic."""

from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hubsim.agents import (
    CHANGE_FRONT_TIME,
    GAP_TIME,
    HEADWAY_MAX,
    HEADWAY_MIN,
    MIN_GAP,
    SignalProgram,
    TransitLine,
    TransitSchedule,
    load_catalog,
    signal_state,
    transit_arrivals,
    validate_catalog,
    validate_schedule,
    validate_signal_program,
)
from hubsim.errors import UnknownHead, UnknownStop
from hubsim.events import AGENT_DESPAWNED, AGENT_SPAWNED, LANE_CHANGE
from hubsim.simcore import neutral_frame, step

from conftest import run_neutral


# --- signals -----------------------------------------------------------------

FIXTURE_PHASES = (("green", 25.0), ("yellow", 3.0), ("red", 12.0))


class TestSignalState:
    def test_phase_boundaries(self):
        prog = SignalProgram(FIXTURE_PHASES, 0.0)
        assert prog.cycle == 40.0
        assert signal_state(prog, 0.0) == "green"
        assert signal_state(prog, 24.999) == "green"
        assert signal_state(prog, 25.0) == "yellow"
        assert signal_state(prog, 27.999) == "yellow"
        assert signal_state(prog, 28.0) == "red"
        assert signal_state(prog, 39.999) == "red"
        assert signal_state(prog, 40.0) == "green"
        assert signal_state(prog, 400040.0) == "green"

    def test_offset_shifts_program(self):
        base = SignalProgram(FIXTURE_PHASES, 0.0)
        off = SignalProgram(FIXTURE_PHASES, 20.0)
        for t in (0.0, 5.0, 7.5, 12.0, 19.99, 20.0, 33.3, 39.0):
            assert signal_state(off, t) == signal_state(base, t + 20.0)

    @given(
        durations=st.lists(st.floats(0.5, 60.0), min_size=1, max_size=5),
        offset=st.floats(0.0, 600.0),
        t=st.floats(0.0, 10_000.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_naive_scan(self, durations, offset, t):
        colors = ["green", "yellow", "red", "yellow", "green"][: len(durations)]
        prog = SignalProgram(tuple(zip(colors, durations)), offset)
        # reference: unroll cumulative boundaries and bisect by hand
        c = math.fmod(t + offset, sum(durations))
        acc = 0.0
        expected = colors[-1]
        for color, d in zip(colors, durations):
            acc += d
            if c < acc:
                expected = color
                break
        assert signal_state(prog, t) == expected

    def test_unknown_head_raises(self, make_world):
        w = make_world()
        with pytest.raises(UnknownHead):
            w.signals.state("nope", 0.0)

    def test_program_validation(self):
        ok = SignalProgram(FIXTURE_PHASES, 0.0)
        assert validate_signal_program("s", ok) == []
        assert validate_signal_program(
            "s", SignalProgram((("green", 5.0), ("green", 5.0), ("red", 4.0)), 0.0)
        )
        assert validate_signal_program("s", SignalProgram((("green", -1.0), ("red", 4.0)), 0.0))
        assert validate_signal_program("s", SignalProgram((("blue", 5.0), ("red", 4.0)), 0.0))


# --- transit schedule ---------------------------------------------------------


def line(lid="g", stops=("a",), offsets=(30.0,), period=420.0, run_times=()):
    return TransitLine(lid, tuple(stops), tuple(offsets), period, tuple(run_times))


class TestValidateSchedule:
    def test_fixture_schedule_clean(self, schedule):
        assert validate_schedule(schedule) == []

    def test_headway_too_wide(self):
        sched = TransitSchedule((line(offsets=(0.0, 700.0), period=1400.0),))
        probs = validate_schedule(sched)
        assert any("headway" in p and "700" in p for p in probs)

    def test_headway_too_tight(self):
        sched = TransitSchedule((line(offsets=(0.0, 100.0), period=400.0),))
        assert any("headway 100" in p for p in validate_schedule(sched))

    def test_wraparound_gap_counted(self):
        # 50 -> 400 gap is 350 (fine), wrap 400 -> 50+p is 70 (too tight)
        sched = TransitSchedule((line(offsets=(50.0, 400.0), period=470.0),))
        assert any("headway 120" in p for p in validate_schedule(sched))

    def test_single_offset_uses_period(self):
        assert validate_schedule(TransitSchedule((line(offsets=(30.0,), period=420.0),))) == []
        bad = validate_schedule(TransitSchedule((line(offsets=(30.0,), period=700.0),)))
        assert any("headway" in p for p in bad)

    def test_offset_outside_period(self):
        sched = TransitSchedule((line(offsets=(500.0,), period=420.0),))
        assert any("[0, period)" in p for p in validate_schedule(sched))

    def test_run_times_length(self):
        sched = TransitSchedule((line(stops=("a", "b"), run_times=()),))
        assert any("run_times" in p for p in validate_schedule(sched))

    def test_headway_bounds_are_five_to_ten_minutes(self):
        assert HEADWAY_MIN == 300.0 and HEADWAY_MAX == 600.0


class TestTransitArrivals:
    def test_periodic_expansion(self):
        sched = TransitSchedule((line(),))
        assert transit_arrivals(sched, "a", 0.0, 1290.0) == [30.0, 450.0, 870.0]

    def test_window_edges(self):
        sched = TransitSchedule((line(),))
        assert transit_arrivals(sched, "a", 30.0, 450.0) == [30.0]  # t0 in, t1 out
        assert transit_arrivals(sched, "a", 31.0, 450.1) == [450.0]

    def test_downstream_stop_shifted_by_run_time(self):
        sched = TransitSchedule((line(stops=("a", "b"), run_times=(60.0,)),))
        assert transit_arrivals(sched, "b", 0.0, 900.0) == [90.0, 510.0]

    def test_unknown_stop(self):
        with pytest.raises(UnknownStop):
            transit_arrivals(TransitSchedule((line(),)), "ghost", 0.0, 100.0)

    def test_mid_horizon_query(self):
        sched = TransitSchedule((line(),))
        arr = transit_arrivals(sched, "a", 100_000.0, 101_000.0)
        assert len(arr) >= 2
        assert all((t - 30.0) % 420.0 == 0.0 for t in arr)


# --- archetype catalog --------------------------------------------------------


class TestCatalog:
    def test_fixture_catalog_clean(self, catalog):
        assert validate_catalog(catalog) == []
        assert len(catalog.pedestrians) == 107
        assert len(catalog.vehicles) == 19

    def _mutate(self, catalog_raw, fn):
        doc = json.loads(catalog_raw)
        fn(doc)
        return load_catalog(json.dumps(doc).encode())

    def test_wrong_ped_count(self, catalog_raw):
        cat = self._mutate(catalog_raw, lambda d: d["pedestrians"].pop())
        assert any("exactly 107" in p for p in validate_catalog(cat))

    def test_wrong_vehicle_count(self, catalog_raw):
        cat = self._mutate(
            catalog_raw, lambda d: d["vehicles"].append(dict(d["vehicles"][0], id="extra"))
        )
        assert any("exactly 19" in p for p in validate_catalog(cat))

    def test_no_trams(self, catalog_raw):
        cat = self._mutate(catalog_raw, lambda d: d.update(trams=[]))
        assert any("tram" in p for p in validate_catalog(cat))

    def test_ped_speed_range(self, catalog_raw):
        cat = self._mutate(
            catalog_raw, lambda d: d["pedestrians"][0].update(walk_speed=0.5)
        )
        assert any("walk_speed" in p for p in validate_catalog(cat))

    def test_vehicle_length_range(self, catalog_raw):
        cat = self._mutate(catalog_raw, lambda d: d["vehicles"][3].update(length=9.0))
        assert any("length" in p for p in validate_catalog(cat))

    def test_ped_archetype_concatenation(self, catalog):
        n = len(catalog.pedestrians)
        assert catalog.ped_archetype(0) is catalog.pedestrians[0]
        assert catalog.ped_archetype(n) is catalog.cyclists[0]


# --- spawning -----------------------------------------------------------------


class TestSpawning:
    def test_bernoulli_rates_within_four_sigma(self, site, make_world):
        ticks = 8000
        dt = 0.05
        rates = {"pedestrian": 0.0, "vehicle": 0.0}
        for sp in site.by_kind("spawn_point"):
            kind = sp.props["agent_kind"]
            key = "pedestrian" if kind in ("pedestrian", "cyclist") else "vehicle"
            rates[key] += float(sp.props["rate"])

        w = make_world(seed=17)
        counts = {"pedestrian": 0, "vehicle": 0, "tram": 0}
        for e in run_neutral(w, ticks):
            if e.kind == AGENT_SPAWNED:
                counts[e.payload["agent_kind"]] += 1

        for key in ("pedestrian", "vehicle"):
            expect = rates[key] * dt * ticks
            sigma = math.sqrt(expect)
            lo, hi = expect - 4 * sigma, expect + 4 * sigma
            assert lo <= counts[key] <= hi, (key, counts[key], (lo, hi))

    def test_despawn_reasons_vocabulary(self, make_world):
        w = make_world(seed=4)
        reasons = {
            e.payload["reason"]
            for e in run_neutral(w, 6000)
            if e.kind == AGENT_DESPAWNED
        }
        assert reasons <= {"route_end", "end_of_line", "boarded", "goal"}
        assert "goal" in reasons

    def test_spawned_agents_use_catalog_archetypes(self, make_world, catalog):
        ids = {
            "vehicle": {v.id for v in catalog.vehicles},
            "tram": {t.id for t in catalog.trams},
            "pedestrian": {p.id for p in catalog.pedestrians}
            | {c.id for c in catalog.cyclists},
        }
        w = make_world(seed=5)
        for e in run_neutral(w, 3000):
            if e.kind == AGENT_SPAWNED:
                assert e.payload["archetype"] in ids[e.payload["agent_kind"]], e


# --- road traffic invariants ----------------------------------------------------


AUDIT_TICKS = 3000


@pytest.fixture(scope="module")
def audit(site, scenario, schedule, catalog):
    """Per-tick traffic audit shared by the TestTraffic invariant tests."""
    from hubsim.simcore import init_world

    w = init_world(site, scenario, schedule, 31, catalog)
    geo_rt = w.geo
    red_crossings = []
    overlaps = []
    changes = []
    for t in range(AUDIT_TICKS):
        before = {
            a.id: (a.lane_id, a.s, a.speed)
            for a in w.agents.values()
            if a.kind == "vehicle"
        }
        t_now = w.tick * w.dt
        red_at = {
            (lane.id, stop_s): w.signals.state(head, t_now) == "red"
            for lane in geo_rt.lanes()
            for stop_s, head in lane.stop_lines
        }
        events = step(w, neutral_frame(w.tick))
        for e in events:
            if e.kind == LANE_CHANGE:
                changes.append((t, e.payload, before.get(e.payload["agent"])))
        for a in w.agents.values():
            if a.kind != "vehicle" or a.id not in before:
                continue
            lane0, s0, _ = before[a.id]
            if lane0 != a.lane_id:
                continue  # lane change: stop lines re-evaluated on the new lane
            for (lid, stop_s), is_red in red_at.items():
                if lid == lane0 and is_red and s0 < stop_s < a.s:
                    red_crossings.append((t, a.id, lid, stop_s))
        by_lane: dict[str, list] = {}
        for a in w.agents.values():
            if a.kind == "vehicle":
                by_lane.setdefault(a.lane_id, []).append(a)
        for lane_id, vs in by_lane.items():
            vs.sort(key=lambda a: a.s)
            for rear, front in zip(vs, vs[1:]):
                if rear.s > front.s - front.length + 1e-9:
                    overlaps.append((t, lane_id, rear.id, front.id))
    return {"red": red_crossings, "overlap": overlaps, "changes": changes}


class TestTraffic:
    def test_no_red_light_crossings(self, audit):
        assert audit["red"] == []

    def test_no_same_lane_overlap(self, audit):
        assert audit["overlap"] == []

    def test_lane_changes_respect_front_threshold(self, audit):
        assert audit["changes"], "no lane change in the audit window"
        for _t, payload, pre in audit["changes"]:
            assert payload["front_gap"] >= 0.0
            assert payload["rear_gap"] >= 0.0
            if pre is not None:
                _lane, _s, speed = pre
                assert payload["front_gap"] >= CHANGE_FRONT_TIME * speed - 1e-9

    def test_following_distance_constants(self):
        assert MIN_GAP == 2.0 and GAP_TIME == 1.5
