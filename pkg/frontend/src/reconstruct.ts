/** Client-side world reconstruction from snapshot and delta messages.
 *
 * A full snapshot replaces the view; a delta merges changed agents, drops
 * removed ones, and overwrites avatar/signals/tour/mutations when present.
 * Deltas are per-tick: a tick gap raises RangeError so the caller can ask
 * the server for a fresh snapshot instead of rendering a torn state.
 */

import type {
  AgentRec,
  AvatarRec,
  DeltaMsg,
  EventRec,
  MutationRec,
  SignalRec,
  SnapshotMsg,
  TourRec,
} from "./protocol.js";

export interface WorldView {
  tick: number;
  avatar: AvatarRec;
  agents: Map<number, AgentRec>;
  signals: SignalRec[];
  tour: TourRec;
  mutations: MutationRec[];
}

export function fromSnapshot(msg: SnapshotMsg): WorldView {
  return {
    tick: msg.tick,
    avatar: msg.avatar,
    agents: new Map(msg.agents.map((a) => [a.id, a])),
    signals: msg.signals,
    tour: msg.tour,
    mutations: msg.mutations,
  };
}

/** Applies one per-tick delta in place and returns its events. */
export function applyDelta(view: WorldView, delta: DeltaMsg): EventRec[] {
  if (delta.tick !== view.tick + 1) {
    throw new RangeError(`delta for tick ${delta.tick} cannot follow tick ${view.tick}`);
  }
  view.tick = delta.tick;
  for (const a of delta.changed_agents) {
    view.agents.set(a.id, a);
  }
  for (const id of delta.removed_agent_ids) {
    view.agents.delete(id);
  }
  if (delta.avatar !== undefined) view.avatar = delta.avatar;
  if (delta.signals !== undefined) view.signals = delta.signals;
  if (delta.tour !== undefined) view.tour = delta.tour;
  if (delta.mutations !== undefined) view.mutations = delta.mutations;
  return delta.events;
}

/** The view in the server's full-snapshot shape, for direct comparison. */
export function toSnapshotShape(view: WorldView): Omit<SnapshotMsg, "t"> {
  const ids = [...view.agents.keys()].sort((a, b) => a - b);
  return {
    tick: view.tick,
    full: true,
    avatar: view.avatar,
    agents: ids.map((id) => view.agents.get(id)!),
    signals: view.signals,
    tour: view.tour,
    mutations: view.mutations,
  };
}
