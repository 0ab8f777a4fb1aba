#!/usr/bin/env python3
"""Record a deterministic gateway session transcript for client tests.

Drives a turbo session over the in-process ASGI transport, feeding the first
500 frames of the bundled tour-walk script, and writes every server message
(welcome, initial snapshot, per-tick deltas, periodic full snapshots) in
order to frontend/tests/fixtures/session-transcript.json. The browser
client's reconstruction test replays this transcript and must match every
embedded full snapshot exactly.

Also asserts the session's own replay log verifies against its checkpoints,
so the transcript is known-good before the client ever sees it.
"""

from __future__ import annotations

import json
import pathlib

from fastapi.testclient import TestClient

from hubsim.agents import load_catalog, load_schedule
from hubsim.gateway import Gateway, create_app
from hubsim.simcore import read_input_log, run_replay
from hubsim.sitemodel import load_site
from hubsim.tour import load_scenario

ROOT = pathlib.Path(__file__).resolve().parent.parent
FX = ROOT / "src" / "hubsim" / "fixtures"
OUT = ROOT / "frontend" / "tests" / "fixtures" / "session-transcript.json"
TICKS = 500
SEED = 42


def main() -> None:
    site_raw = (FX / "durlacher-tor-mini.site.json").read_bytes()
    scen_raw = (FX / "tour.json").read_bytes()
    gw = Gateway(
        site_raw=site_raw,
        scenario_raw=scen_raw,
        schedule=load_schedule((FX / "schedule.json").read_bytes()),
        catalog=load_catalog((FX / "catalog.json").read_bytes()),
        site=load_site(site_raw),
        scenario=load_scenario(scen_raw),
        seed=SEED,
    )
    app = create_app(gw)
    client = TestClient(app)
    script = read_input_log((FX / "tour-walk.jsonl").read_bytes())[:TICKS]

    messages: list[dict] = []
    with client.websocket_connect("/session?turbo=1") as ws:
        ws.send_text(json.dumps({"t": "hello", "proto": 1, "name": "recorder"}))
        messages.append(json.loads(ws.receive_text()))  # welcome
        messages.append(json.loads(ws.receive_text()))  # initial snapshot
        for t in range(TICKS):
            if t < len(script):
                f = script[t]
                ws.send_text(
                    json.dumps(
                        {
                            "t": "input",
                            "tick": t,
                            "move": [f.move[0], f.move[1]],
                            "rot": f.rot,
                            "act": f.act,
                        }
                    )
                )
            ws.send_text(json.dumps({"t": "tick", "n": 1}))
            delta = json.loads(ws.receive_text())
            messages.append(delta)
            if delta["tick"] % 100 == 0:  # full snapshot follows on century ticks
                messages.append(json.loads(ws.receive_text()))

    sess = gw.last_session
    result = run_replay(
        gw.site, gw.scenario, gw.schedule, SEED, sess.replay_log, sess.checkpoints,
        gw.catalog,
    )
    if not result.ok:
        raise SystemExit(f"session replay diverged at tick {result.tick}")

    kinds = {}
    for m in messages:
        kinds[m["t"]] = kinds.get(m["t"], 0) + 1
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(messages, separators=(",", ":")) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({len(messages)} messages: {kinds})")
    print(f"replay self-check passed over {len(sess.checkpoints)} checkpoints")


if __name__ == "__main__":
    main()
