/** Entry point: fetch the static documents, open the session, run the loop.
 *
 * One animation frame = drain network queue, apply messages, send at most
 * one input frame for the newest tick, derive the view-model, paint.
 */

import { Hud } from "./hud.js";
import { InputMapper } from "./input.js";
import type { GamepadSample } from "./input.js";
import { SessionClient } from "./net.js";
import type { ScenarioDoc, SiteDoc } from "./protocol.js";
import { applyDelta, fromSnapshot } from "./reconstruct.js";
import type { WorldView } from "./reconstruct.js";
import { render } from "./render.js";
import type { FrameVM } from "./render.js";
import {
  activePulses,
  addedStripSegments,
  barrierMarkers,
  guidedPathVisible,
  obstacleOffsets,
} from "./viewmodel.js";
import type { Pulse } from "./viewmodel.js";

async function fetchJson<T>(path: string): Promise<T> {
  const res = await fetch(path);
  if (!res.ok) throw new Error(`${path}: HTTP ${res.status}`);
  return (await res.json()) as T;
}

function readGamepad(): GamepadSample | undefined {
  const pad = navigator.getGamepads?.()[0];
  if (!pad) return undefined;
  return {
    moveX: pad.axes[0] ?? 0,
    moveY: -(pad.axes[1] ?? 0), // stick up is negative; forward is +y
    rotX: pad.axes[2] ?? 0,
    act: pad.buttons.some((b, i) => i < 2 && b.pressed),
  };
}

async function start(): Promise<void> {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const hud = new Hud(document);

  const [site, scenario] = await Promise.all([
    fetchJson<SiteDoc>("/site"),
    fetchJson<ScenarioDoc>("/scenario"),
  ]);

  const wsProto = location.protocol === "https:" ? "wss:" : "ws:";
  const client = new SessionClient(`${wsProto}//${location.host}/session`, (open) => {
    hud.setStatus(open ? "connected" : "disconnected");
  });

  const mapper = new InputMapper();
  window.addEventListener("keydown", (e) => {
    if (mapper.isBound(e.code)) {
      mapper.keyDown(e.code);
      e.preventDefault();
    }
  });
  window.addEventListener("keyup", (e) => {
    if (mapper.isBound(e.code)) {
      mapper.keyUp(e.code);
      e.preventDefault();
    }
  });

  let view: WorldView | null = null;
  let tickHz = 20;
  let awaitingResync = false;
  let pulses: Pulse[] = [];

  function resize(): void {
    canvas.width = window.innerWidth;
    canvas.height = window.innerHeight;
  }
  window.addEventListener("resize", resize);
  resize();

  function loop(): void {
    for (const msg of client.drain()) {
      if (msg.t === "welcome") {
        tickHz = msg.tick_hz;
        hud.setStatus(`connected, session ${msg.session} @ ${tickHz} Hz`);
      } else if (msg.t === "snapshot") {
        view = fromSnapshot(msg);
        awaitingResync = false;
        hud.setTour(view.tour);
      } else if (msg.t === "delta") {
        if (view === null || awaitingResync) continue;
        try {
          const events = applyDelta(view, msg);
          hud.processEvents(events);
          if (msg.tour) hud.setTour(msg.tour);
          for (const e of events) {
            if (e.kind === "ParticleCue") {
              const center = e["center"] as [number, number];
              const barrier = scenario.barriers.find((b) => b.id === e["barrier"]);
              pulses.push({
                barrier: String(e["barrier"]),
                level: barrier?.level ?? view.avatar.level,
                center,
                radius: Number(e["radius"] ?? 5),
                startTick: e.tick,
              });
            }
          }
        } catch (err) {
          if (err instanceof RangeError) {
            client.requestResync(); // missed a delta; rebuild from a snapshot
            awaitingResync = true;
          } else {
            throw err;
          }
        }
      } else if (msg.t === "error") {
        hud.setStatus(`server error ${msg.code}: ${msg.message}`);
      }
    }

    if (view !== null) {
      const frame = mapper.frame(view.tick, readGamepad());
      if (frame !== null) client.sendInput(frame);

      pulses = activePulses(pulses, view.tick);
      const vm: FrameVM = {
        markers: barrierMarkers(scenario, view.tour),
        pathVisible: guidedPathVisible(view.tour),
        pulses,
        obstacleOffsets: obstacleOffsets(scenario, view.mutations, view.tick, tickHz),
        addedStrips: addedStripSegments(scenario, view.mutations),
      };
      render(ctx, canvas.width, canvas.height, site, view, vm);
    }
    requestAnimationFrame(loop);
  }
  requestAnimationFrame(loop);
}

start().catch((err) => {
  document.getElementById("hud-status")!.textContent = `failed to start: ${err}`;
});
