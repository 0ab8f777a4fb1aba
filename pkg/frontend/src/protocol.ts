/** Wire protocol for the walkthrough session (proto 1).
 *
 * The server is authoritative. The client sends a hello, at most one input
 * frame per tick, and resync requests; it receives a welcome, an initial
 * full snapshot, one delta per tick, and a full snapshot refresh after
 * every 100th tick. Static geometry is fetched once over HTTP (`/site`,
 * `/scenario`) and never streamed.
 */

export const PROTO_VERSION = 1;

export type Vec2 = [number, number];

/** [level, x, y] triplet; paths cross levels only at connectors. */
export type LevelPoint = [number, number, number];

export type AgentKind = "pedestrian" | "vehicle" | "tram";
export type SignalColor = "green" | "yellow" | "red";
export type Phase = "Guided" | "Approached" | "Resolved";

export interface AgentRec {
  id: number;
  kind: AgentKind;
  archetype: number;
  level: number;
  pos: Vec2;
  speed: number;
  lane?: string;
  s?: number;
  line?: string;
}

export interface AvatarRec {
  level: number;
  pos: Vec2;
  heading: number;
  transit: { connector: string; remaining: number } | null;
}

export interface SignalRec {
  id: string;
  color: SignalColor;
}

export interface TourRec {
  target_index: number;
  completed: boolean;
  phases: Phase[];
  guided_path: LevelPoint[];
  arrow_guides: Record<string, LevelPoint[]>;
}

export interface MutationRec {
  barrier: string;
  kind: string;
  tick: number;
}

export interface EventRec {
  tick: number;
  kind: string;
  [key: string]: unknown;
}

export interface WelcomeMsg {
  t: "welcome";
  session: string;
  tick_hz: number;
  site_digest: string;
  scenario_digest: string;
}

export interface SnapshotMsg {
  t: "snapshot";
  tick: number;
  full: true;
  avatar: AvatarRec;
  agents: AgentRec[];
  signals: SignalRec[];
  tour: TourRec;
  mutations: MutationRec[];
}

export interface DeltaMsg {
  t: "delta";
  tick: number;
  changed_agents: AgentRec[];
  removed_agent_ids: number[];
  events: EventRec[];
  avatar?: AvatarRec;
  tour?: TourRec;
  signals?: SignalRec[];
  mutations?: MutationRec[];
}

export interface ErrorMsg {
  t: "error";
  code: string;
  message: string;
}

export interface PongMsg {
  t: "pong";
  ts: unknown;
}

export type ServerMsg = WelcomeMsg | SnapshotMsg | DeltaMsg | ErrorMsg | PongMsg;

export interface InputMsg {
  t: "input";
  tick: number;
  move: Vec2;
  rot: -1 | 0 | 1;
  act: boolean;
}

export function decodeServerMsg(raw: string): ServerMsg {
  const obj = JSON.parse(raw) as { t?: unknown };
  const t = obj.t;
  if (t === "welcome" || t === "snapshot" || t === "delta" || t === "error" || t === "pong") {
    return obj as ServerMsg;
  }
  throw new Error(`unknown server message type ${String(t)}`);
}

export function helloMsg(): string {
  return JSON.stringify({ t: "hello", proto: PROTO_VERSION });
}

// --- static documents fetched over HTTP -------------------------------------

export interface FeatureDoc {
  id: string;
  level: number;
  kind: string;
  geometry: { type: "polygon" | "polyline"; vertices: Vec2[] };
  props: Record<string, unknown>;
}

export interface SiteDoc {
  name: string;
  format_version: number;
  bounds: { w: number; h: number };
  levels: number[];
  features: FeatureDoc[];
}

export interface ResolutionDoc {
  kind: string;
  strip_id?: string;
  polyline?: Vec2[];
  obstacle_ids?: string[];
  displacements?: Vec2[];
  duration?: number;
  broken_connector_id?: string;
  alternative_connector_id?: string;
}

export interface BarrierDoc {
  id: string;
  kind: string;
  level: number;
  trigger: { center: Vec2; radius: number };
  highlight: { marker_anchor: number[]; cue_radius: number };
  info_text: string;
  resolution: ResolutionDoc;
}

export interface ScenarioDoc {
  version: number;
  start_pose: { level: number; position: Vec2; heading: number };
  barriers: BarrierDoc[];
}
