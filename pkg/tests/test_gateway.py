"""Wire protocol, session mechanics, and client-side reconstruction."""

from __future__ import annotations

import copy
import json
import math
import time

import pytest
from fastapi.testclient import TestClient

from hubsim.errors import DecodeError
from hubsim.gateway import (
    FULL_SNAPSHOT_EVERY,
    INPUT_QUEUE_MAX,
    PROTO_VERSION,
    TICK_HZ,
    Gateway,
    apply_delta,
    create_app,
    decode_msg,
    encode_msg,
    make_delta,
)
from hubsim.simcore import InputFrame, read_input_log, run_replay, snapshot

from conftest import FX


@pytest.fixture
def gw(site_raw, scenario_raw, schedule, catalog, site, scenario):
    return Gateway(
        site_raw=site_raw,
        scenario_raw=scenario_raw,
        schedule=schedule,
        catalog=catalog,
        site=site,
        scenario=scenario,
        seed=42,
    )


@pytest.fixture
def client(gw):
    return TestClient(create_app(gw))


def hello(ws, proto=PROTO_VERSION):
    ws.send_text(encode_msg({"t": "hello", "proto": proto, "name": "test"}))


def recv(ws) -> dict:
    return json.loads(ws.receive_text())


def turbo(ws, n=1):
    ws.send_text(encode_msg({"t": "tick", "n": n}))


# --- pure protocol functions ----------------------------------------------------


class TestCodec:
    def test_roundtrip(self):
        msg = {"t": "input", "tick": 3, "move": [0.5, -1.0], "rot": -1, "act": True}
        assert decode_msg(encode_msg(msg)) == msg

    def test_compact_encoding(self):
        assert " " not in encode_msg({"t": "ping", "ts": 1})

    def test_bad_json(self):
        with pytest.raises(DecodeError):
            decode_msg("{not json")

    def test_non_object(self):
        with pytest.raises(DecodeError):
            decode_msg("[1,2,3]")


class TestDeltaFunctions:
    def snap(self):
        return {
            "tick": 5,
            "full": True,
            "avatar": {"level": 0, "pos": [1.0, 2.0], "heading": 90, "transit": None},
            "agents": [
                {"id": 1, "kind": "pedestrian", "archetype": "p0", "level": 0,
                 "pos": [3.0, 4.0], "speed": 1.1},
                {"id": 2, "kind": "vehicle", "archetype": "v0", "level": 0,
                 "pos": [9.0, 9.0], "speed": 5.0, "lane": "l1", "s": 12.0},
            ],
            "signals": [{"id": "sig", "color": "green"}],
            "tour": {"target_index": 0, "completed": False, "phases": ["Guided"],
                     "guided_path": [], "arrow_guides": {}},
            "mutations": [],
        }

    def test_identical_snapshots_make_empty_delta(self):
        prev = self.snap()
        curr = copy.deepcopy(prev)
        d = make_delta(prev, curr, [])
        assert d["changed_agents"] == []
        assert d["removed_agent_ids"] == []
        assert d["events"] == []
        for key in ("avatar", "tour", "signals", "mutations"):
            assert key not in d

    def test_one_agent_moved(self):
        prev = self.snap()
        curr = copy.deepcopy(prev)
        curr["tick"] = 6
        curr["agents"][0]["pos"] = [3.1, 4.0]
        d = make_delta(prev, curr, [])
        assert [a["id"] for a in d["changed_agents"]] == [1]
        assert apply_delta(prev, d) == curr

    def test_removed_agent(self):
        prev = self.snap()
        curr = copy.deepcopy(prev)
        curr["tick"] = 6
        del curr["agents"][0]
        d = make_delta(prev, curr, [])
        assert d["removed_agent_ids"] == [1]
        assert d["changed_agents"] == []
        assert apply_delta(prev, d) == curr

    def test_avatar_and_signals_carried_only_on_change(self):
        prev = self.snap()
        curr = copy.deepcopy(prev)
        curr["tick"] = 6
        curr["avatar"]["heading"] = 135
        curr["signals"][0]["color"] = "yellow"
        d = make_delta(prev, curr, [])
        assert d["avatar"] == curr["avatar"]
        assert d["signals"] == curr["signals"]
        assert "tour" not in d and "mutations" not in d
        assert apply_delta(prev, d) == curr

    def test_spec_required_delta_fields_present(self):
        d = make_delta(self.snap(), self.snap(), [])
        assert {"t", "tick", "changed_agents", "removed_agent_ids", "events"} <= set(d)


# --- session mechanics (no socket) -----------------------------------------------


class TestSession:
    def test_queue_bounded_drop_oldest(self, gw):
        sess = gw.open_session(turbo=True)
        frames = [InputFrame(tick=0, move=(i / 10.0, 0.0)) for i in range(9)]
        dropped = [sess.push_input(f) for f in frames]
        assert dropped == [False] * INPUT_QUEUE_MAX + [True]
        assert sess.dropped == 1
        assert len(sess.queue) == INPUT_QUEUE_MAX
        # oldest frame (move 0.0) is gone; the survivor head is frame #1
        assert sess.queue[0].move == (0.1, 0.0)

    def test_step_once_consumes_queue_then_neutral(self, gw):
        sess = gw.open_session(turbo=True)
        sess.push_input(InputFrame(tick=77, move=(0.0, 1.0)))
        sess.step_once()
        sess.step_once()
        assert [f.move for f in sess.replay_log] == [(0.0, 1.0), (0.0, 0.0)]
        # frames are re-stamped to the world tick regardless of client tick
        assert [f.tick for f in sess.replay_log] == [0, 1]

    def test_checkpoint_cadence(self, gw):
        sess = gw.open_session(turbo=True)
        for _ in range(201):
            sess.step_once()
        assert [t for t, _ in sess.checkpoints] == [0, 100, 200]

    def test_snapshot_message_cadence(self, gw):
        sess = gw.open_session(turbo=True)
        out = []
        for _ in range(FULL_SNAPSHOT_EVERY * 2):
            out.extend(sess.step_once())
        snaps = [m for m in out if m.get("t") == "snapshot"]
        deltas = [m for m in out if m.get("t") == "delta"]
        assert len(deltas) == FULL_SNAPSHOT_EVERY * 2
        assert [s["tick"] for s in snaps] == [100, 200]


# --- websocket endpoint -----------------------------------------------------------


class TestHandshake:
    def test_welcome_and_initial_snapshot(self, client, gw, site_raw, scenario_raw):
        import hashlib

        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            wl = recv(ws)
            assert wl["t"] == "welcome"
            assert wl["tick_hz"] == TICK_HZ == 20
            assert wl["session"]
            assert wl["site_digest"] == hashlib.sha256(site_raw).hexdigest()
            assert wl["scenario_digest"] == hashlib.sha256(scenario_raw).hexdigest()
            snap = recv(ws)
            assert snap["t"] == "snapshot"
            assert snap["tick"] == 0 and snap["full"] is True

    def test_wrong_proto_then_recover(self, client):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws, proto=99)
            err = recv(ws)
            assert err["t"] == "error" and err["code"] == "PROTO"
            hello(ws)
            assert recv(ws)["t"] == "welcome"

    def test_non_hello_first_rejected(self, client):
        with client.websocket_connect("/session?turbo=1") as ws:
            ws.send_text(encode_msg({"t": "ping", "ts": 0}))
            err = recv(ws)
            assert err["t"] == "error" and err["code"] == "PROTO"

    def test_second_hello_rejected(self, client):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws), recv(ws)
            hello(ws)
            err = recv(ws)
            assert err["code"] == "PROTO" and "established" in err["message"]


class TestTurboSession:
    def test_ping_pong(self, client):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws), recv(ws)
            ws.send_text(encode_msg({"t": "ping", "ts": 123.5}))
            pong = recv(ws)
            assert pong == {"t": "pong", "ts": 123.5}

    def test_unknown_type_keeps_session_alive(self, client):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws), recv(ws)
            ws.send_text(encode_msg({"t": "flub"}))
            err = recv(ws)
            assert err["code"] == "UNSUPPORTED"
            turbo(ws)  # still usable
            assert recv(ws)["t"] == "delta"

    def test_bad_json_reports_decode(self, client):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws), recv(ws)
            ws.send_text("{oops")
            assert recv(ws)["code"] == "DECODE"

    def test_neutral_ticks_advance_world(self, client, gw):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws), recv(ws)
            turbo(ws, n=50)
            ticks = [recv(ws)["tick"] for _ in range(50)]
            assert ticks == list(range(1, 51))
        assert all(f.move == (0.0, 0.0) for f in gw.last_session.replay_log)

    def test_input_clamped_to_unit_disc(self, client, gw):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws), recv(ws)
            ws.send_text(encode_msg({"t": "input", "move": [1.3, 0.0], "rot": 0.7}))
            ws.send_text(encode_msg({"t": "input", "move": [3.0, 4.0], "rot": -2}))
            turbo(ws, n=2)
            recv(ws), recv(ws)
        log = gw.last_session.replay_log
        assert log[0].move == (1.0, 0.0) and log[0].rot == 1
        assert math.hypot(*log[1].move) == pytest.approx(1.0)
        assert log[1].rot == -1

    def test_input_queue_overflow_reports_drop(self, client, gw):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws), recv(ws)
            for i in range(INPUT_QUEUE_MAX + 1):
                ws.send_text(encode_msg({"t": "input", "move": [i / 10.0, 0.0]}))
            err = recv(ws)
            assert err["t"] == "error" and err["code"] == "INPUT_DROPPED"
            turbo(ws)
            recv(ws)
        # the oldest frame (move 0.0) was dropped, the second consumed first
        assert gw.last_session.replay_log[0].move == (0.1, 0.0)

    def test_resync_matches_client_state(self, client):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws)
            state = recv(ws)
            state.pop("t")
            turbo(ws, n=7)
            for _ in range(7):
                state = apply_delta(state, recv(ws))
            ws.send_text(encode_msg({"t": "resync"}))
            fresh = recv(ws)
            assert fresh["t"] == "snapshot"
            fresh.pop("t")
            assert fresh == state


class TestReconstruction:
    TICKS = 500

    def test_client_state_matches_every_full_snapshot(self, client, gw):
        script = read_input_log((FX / "tour-walk.jsonl").read_bytes())[: self.TICKS]
        compared = 0
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws)
            state = recv(ws)
            state.pop("t")
            for t in range(self.TICKS):
                f = script[t]
                ws.send_text(
                    encode_msg(
                        {
                            "t": "input",
                            "tick": t,
                            "move": [f.move[0], f.move[1]],
                            "rot": f.rot,
                            "act": f.act,
                        }
                    )
                )
                turbo(ws)
                delta = recv(ws)
                assert delta["t"] == "delta"
                state = apply_delta(state, delta)
                if delta["tick"] % FULL_SNAPSHOT_EVERY == 0:
                    full = recv(ws)
                    assert full["t"] == "snapshot"
                    full.pop("t")
                    assert state == full, f"divergence at tick {delta['tick']}"
                    compared += 1
            # ground truth straight from the authoritative world
            assert state == snapshot(gw.last_session.world)
        assert compared == self.TICKS // FULL_SNAPSHOT_EVERY

    def test_session_replay_log_verifies(self, client, gw):
        with client.websocket_connect("/session?turbo=1") as ws:
            hello(ws)
            recv(ws), recv(ws)
            ws.send_text(encode_msg({"t": "input", "move": [0.0, 1.0]}))
            turbo(ws, n=150)
            for _ in range(150 + 1):  # 150 deltas + 1 century snapshot
                recv(ws)
            sess = gw.last_session
            res = run_replay(
                gw.site, gw.scenario, gw.schedule, gw.seed,
                sess.replay_log, sess.checkpoints, gw.catalog,
            )
            assert res.ok, f"replay diverged at tick {res.tick}"


class TestHttpEndpoints:
    def test_site_and_scenario_bytes(self, client, site_raw, scenario_raw):
        assert client.get("/site").content == site_raw
        assert client.get("/scenario").content == scenario_raw

    def test_health(self, client):
        body = client.get("/health").json()
        assert body["ok"] is True


class TestRealtimeLiveness:
    def test_tick_rate_20hz_over_10s(self, client, gw):
        """A silent client must see ticks advance at 20 +/- 1 Hz over 10 s."""
        window = 10.0
        with client.websocket_connect("/session") as ws:
            hello(ws)
            recv(ws), recv(ws)
            t0 = time.monotonic()
            last_tick = 0
            while time.monotonic() - t0 < window:
                msg = recv(ws)
                if msg["t"] in ("delta", "snapshot"):
                    last_tick = msg["tick"]
            elapsed = time.monotonic() - t0
        rate = last_tick / elapsed
        assert 19.0 <= rate <= 21.0, f"{last_tick} ticks in {elapsed:.2f}s = {rate:.2f} Hz"
