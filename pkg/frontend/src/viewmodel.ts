/** Pure view-model: what the renderer should draw, derived from state.
 *
 * Keeping these decisions out of the canvas code makes the fidelity rules
 * testable without a DOM. The two load-bearing rules: an exclamation
 * marker is drawn for a barrier iff its phase is Guided or Approached in
 * the latest tour state, and the ground path is drawn iff the tour is not
 * completed.
 */

import type {
  MutationRec,
  Phase,
  ScenarioDoc,
  TourRec,
  Vec2,
} from "./protocol.js";

export interface MarkerVM {
  barrier: string;
  level: number;
  pos: Vec2;
  phase: Phase;
  current: boolean;
}

export function barrierMarkers(scenario: ScenarioDoc, tour: TourRec): MarkerVM[] {
  const out: MarkerVM[] = [];
  scenario.barriers.forEach((b, i) => {
    const phase = tour.phases[i] ?? "Guided";
    if (phase === "Guided" || phase === "Approached") {
      out.push({
        barrier: b.id,
        level: b.level,
        pos: [b.highlight.marker_anchor[0] ?? 0, b.highlight.marker_anchor[1] ?? 0],
        phase,
        current: i === tour.target_index,
      });
    }
  });
  return out;
}

export function guidedPathVisible(tour: TourRec): boolean {
  return !tour.completed;
}

// --- proximity cues -----------------------------------------------------------

export const PULSE_TICKS = 40; // the cue effect plays for 2 s at 20 Hz

export interface Pulse {
  barrier: string;
  level: number;
  center: Vec2;
  radius: number;
  startTick: number;
}

export function activePulses(pulses: Pulse[], tick: number): Pulse[] {
  return pulses.filter((p) => tick - p.startTick < PULSE_TICKS);
}

/** 0..1 animation progress of a pulse at a tick. */
export function pulseProgress(pulse: Pulse, tick: number): number {
  return Math.min(1, Math.max(0, (tick - pulse.startTick) / PULSE_TICKS));
}

// --- mutation playback --------------------------------------------------------

/** Current visual offset of each obstacle moved by a ClearObstacles record.
 *
 * Obstacle geometry is static (fetched once), so the slide is replayed
 * client side: linear from the record's tick over the scenario's duration,
 * matching the server's own animation tick for tick.
 */
export function obstacleOffsets(
  scenario: ScenarioDoc,
  mutations: MutationRec[],
  tick: number,
  tickHz: number,
): Map<string, Vec2> {
  const out = new Map<string, Vec2>();
  for (const rec of mutations) {
    if (rec.kind !== "ClearObstacles") continue;
    const barrier = scenario.barriers.find((b) => b.id === rec.barrier);
    if (!barrier) continue;
    const res = barrier.resolution;
    const durTicks = Math.max(1, Math.round((res.duration ?? 0) * tickHz));
    const frac = Math.min(1, Math.max(0, (tick - rec.tick) / durTicks));
    res.obstacle_ids?.forEach((oid, i) => {
      const d = res.displacements?.[i];
      if (d) out.set(oid, [d[0] * frac, d[1] * frac]);
    });
  }
  return out;
}

/** Strip segments added by AddGuideStripSegment records, ready to draw. */
export function addedStripSegments(
  scenario: ScenarioDoc,
  mutations: MutationRec[],
): { stripId: string; level: number; polyline: Vec2[] }[] {
  const out: { stripId: string; level: number; polyline: Vec2[] }[] = [];
  for (const rec of mutations) {
    if (rec.kind !== "AddGuideStripSegment") continue;
    const barrier = scenario.barriers.find((b) => b.id === rec.barrier);
    const res = barrier?.resolution;
    if (barrier && res?.strip_id && res.polyline) {
      out.push({ stripId: res.strip_id, level: barrier.level, polyline: res.polyline });
    }
  }
  return out;
}

/** Tour progress as resolved-barrier count, for the HUD's "n / total". */
export function tourProgress(tour: TourRec): { done: number; total: number } {
  return {
    done: tour.phases.filter((p) => p === "Resolved").length,
    total: tour.phases.length,
  };
}
