/** Top-down canvas renderer for the active level.
 *
 * Pure painter: reads the reconstructed view and the frame view-model,
 * never mutates either. World coordinates are meters, y up; the camera
 * centers on the avatar with a fixed meters-to-pixels zoom.
 */

import type { FeatureDoc, SiteDoc, SignalRec, Vec2 } from "./protocol.js";
import type { WorldView } from "./reconstruct.js";
import type { MarkerVM, Pulse } from "./viewmodel.js";
import { pulseProgress } from "./viewmodel.js";

export const PX_PER_M = 12;

export interface FrameVM {
  markers: MarkerVM[];
  pathVisible: boolean;
  pulses: Pulse[];
  obstacleOffsets: Map<string, Vec2>;
  addedStrips: { level: number; polyline: Vec2[] }[];
}

const COLORS = {
  background: "#1b1d22",
  surface: "#3a3f4a",
  surfaceBelow: "#333845",
  road: "#2a2d34",
  track: "#555b66",
  crossing: "#4a5160",
  strip: "#d8b44a",
  stripAdded: "#ffd866",
  obstacle: "#7a5f8a",
  connector: "#4f6b5e",
  connectorBroken: "#6b4f4f",
  stop: "#4a6f8a",
  pedestrian: "#cfd6e4",
  cyclist: "#9fd6b4",
  vehicle: "#8fa3b0",
  tram: "#c46a6a",
  avatar: "#5ad1ff",
  path: "#59c96a",
  marker: "#ffb02e",
  pulse: "#ffd866",
  arrow: "#59c9c9",
} as const;

interface Camera {
  cx: number;
  cy: number;
  w: number;
  h: number;
}

function toScreen(cam: Camera, p: Vec2): Vec2 {
  return [
    cam.w / 2 + (p[0] - cam.cx) * PX_PER_M,
    cam.h / 2 - (p[1] - cam.cy) * PX_PER_M,
  ];
}

function tracePoly(ctx: CanvasRenderingContext2D, cam: Camera, pts: Vec2[], close: boolean): void {
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [x, y] = toScreen(cam, p);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  if (close) ctx.closePath();
}

function offsetVerts(f: FeatureDoc, offsets: Map<string, Vec2>): Vec2[] {
  const d = offsets.get(f.id);
  if (!d) return f.geometry.vertices;
  return f.geometry.vertices.map(([x, y]): Vec2 => [x + d[0], y + d[1]]);
}

export function render(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  site: SiteDoc,
  view: WorldView,
  vm: FrameVM,
): void {
  const level = view.avatar.level;
  const cam: Camera = { cx: view.avatar.pos[0], cy: view.avatar.pos[1], w: width, h: height };
  const signalColor = new Map(view.signals.map((s: SignalRec) => [s.id, s.color]));

  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, width, height);

  const atLevel = site.features.filter((f) => f.level === level);

  for (const f of atLevel) {
    if (f.kind !== "walk_surface") continue;
    tracePoly(ctx, cam, f.geometry.vertices, true);
    ctx.fillStyle = level === 0 ? COLORS.surface : COLORS.surfaceBelow;
    ctx.fill();
  }
  for (const f of atLevel) {
    if (f.kind === "road_lane") {
      tracePoly(ctx, cam, f.geometry.vertices, false);
      ctx.strokeStyle = COLORS.road;
      ctx.lineWidth = 3.2 * PX_PER_M;
      ctx.lineCap = "butt";
      ctx.stroke();
    } else if (f.kind === "crossing") {
      tracePoly(ctx, cam, f.geometry.vertices, true);
      ctx.fillStyle = COLORS.crossing;
      ctx.fill();
    }
  }
  for (const f of atLevel) {
    if (f.kind !== "tram_track") continue;
    tracePoly(ctx, cam, f.geometry.vertices, false);
    ctx.strokeStyle = COLORS.track;
    ctx.lineWidth = 2;
    ctx.setLineDash([10, 6]);
    ctx.stroke();
    ctx.setLineDash([]);
  }
  for (const f of atLevel) {
    if (f.kind !== "guide_strip") continue;
    tracePoly(ctx, cam, f.geometry.vertices, false);
    ctx.strokeStyle = COLORS.strip;
    ctx.lineWidth = 0.4 * PX_PER_M;
    ctx.stroke();
  }
  for (const seg of vm.addedStrips) {
    if (seg.level !== level) continue;
    tracePoly(ctx, cam, seg.polyline, false);
    ctx.strokeStyle = COLORS.stripAdded;
    ctx.lineWidth = 0.4 * PX_PER_M;
    ctx.stroke();
  }
  for (const f of atLevel) {
    if (f.kind === "obstacle") {
      tracePoly(ctx, cam, offsetVerts(f, vm.obstacleOffsets), true);
      ctx.fillStyle = COLORS.obstacle;
      ctx.fill();
    } else if (f.kind === "connector") {
      const broken = f.props["operational"] === false;
      tracePoly(ctx, cam, f.geometry.vertices, true);
      ctx.fillStyle = broken ? COLORS.connectorBroken : COLORS.connector;
      ctx.fill();
      const c = centroid(f.geometry.vertices);
      const [x, y] = toScreen(cam, c);
      ctx.fillStyle = "#e8e8e8";
      ctx.font = `${PX_PER_M}px system-ui, sans-serif`;
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      const glyph = f.props["kind"] === "stairs" ? "S" : broken ? "E✕" : "E";
      ctx.fillText(glyph, x, y);
    } else if (f.kind === "stop") {
      tracePoly(ctx, cam, f.geometry.vertices, true);
      ctx.strokeStyle = COLORS.stop;
      ctx.lineWidth = 2;
      ctx.stroke();
    }
  }
  for (const f of atLevel) {
    if (f.kind !== "signal_head") continue;
    const anchor = f.geometry.vertices[0];
    if (!anchor) continue;
    const [x, y] = toScreen(cam, anchor);
    ctx.beginPath();
    ctx.arc(x, y, 0.45 * PX_PER_M, 0, Math.PI * 2);
    const color = signalColor.get(f.id);
    ctx.fillStyle = color === "red" ? "#e05252" : color === "yellow" ? "#e0c552" : "#52e07a";
    ctx.fill();
  }

  if (vm.pathVisible) {
    const pts = view.tour.guided_path.filter(([lv]) => lv === level).map(([, x, y]): Vec2 => [x, y]);
    if (pts.length >= 2) {
      tracePoly(ctx, cam, pts, false);
      ctx.strokeStyle = COLORS.path;
      ctx.lineWidth = 0.25 * PX_PER_M;
      ctx.setLineDash([8, 8]);
      ctx.lineDashOffset = -(view.tick % 16);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }

  for (const [, chain] of Object.entries(view.tour.arrow_guides)) {
    const pts = chain.filter(([lv]) => lv === level).map(([, x, y]): Vec2 => [x, y]);
    drawArrowChain(ctx, cam, pts, view.tick);
  }

  for (const a of view.agents.values()) {
    if (a.level !== level) continue;
    const [x, y] = toScreen(cam, a.pos);
    ctx.beginPath();
    if (a.kind === "tram") {
      ctx.fillStyle = COLORS.tram;
      ctx.arc(x, y, 1.4 * PX_PER_M, 0, Math.PI * 2);
    } else if (a.kind === "vehicle") {
      ctx.fillStyle = COLORS.vehicle;
      ctx.arc(x, y, 1.0 * PX_PER_M, 0, Math.PI * 2);
    } else {
      ctx.fillStyle = COLORS.pedestrian;
      ctx.arc(x, y, 0.35 * PX_PER_M, 0, Math.PI * 2);
    }
    ctx.fill();
  }

  drawAvatar(ctx, cam, view.avatar.pos, view.avatar.heading);

  for (const pulse of vm.pulses) {
    if (pulse.level !== level) continue;
    const frac = pulseProgress(pulse, view.tick);
    const [x, y] = toScreen(cam, pulse.center);
    ctx.beginPath();
    ctx.arc(x, y, pulse.radius * frac * PX_PER_M, 0, Math.PI * 2);
    ctx.strokeStyle = COLORS.pulse;
    ctx.globalAlpha = 1 - frac;
    ctx.lineWidth = 3;
    ctx.stroke();
    ctx.globalAlpha = 1;
  }

  for (const m of vm.markers) {
    if (m.level !== level) continue;
    const bob = Math.sin(view.tick / 5) * 3; // gentle attention bounce
    const [x, y] = toScreen(cam, m.pos);
    ctx.beginPath();
    ctx.arc(x, y - 1.6 * PX_PER_M + bob, 0.8 * PX_PER_M, 0, Math.PI * 2);
    ctx.fillStyle = COLORS.marker;
    ctx.globalAlpha = m.current ? 1 : 0.55;
    ctx.fill();
    ctx.fillStyle = "#2a2216";
    ctx.font = `bold ${1.1 * PX_PER_M}px system-ui, sans-serif`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText("!", x, y - 1.6 * PX_PER_M + bob);
    ctx.globalAlpha = 1;
  }
}

function centroid(pts: Vec2[]): Vec2 {
  let sx = 0;
  let sy = 0;
  for (const [x, y] of pts) {
    sx += x;
    sy += y;
  }
  return [sx / pts.length, sy / pts.length];
}

function drawAvatar(ctx: CanvasRenderingContext2D, cam: Camera, pos: Vec2, heading: number): void {
  const [x, y] = toScreen(cam, pos);
  // heading 0 is +y (up on screen), clockwise positive
  const rad = (heading * Math.PI) / 180;
  ctx.save();
  ctx.translate(x, y);
  ctx.rotate(rad);
  ctx.beginPath();
  ctx.moveTo(0, -0.7 * PX_PER_M);
  ctx.lineTo(0.45 * PX_PER_M, 0.5 * PX_PER_M);
  ctx.lineTo(-0.45 * PX_PER_M, 0.5 * PX_PER_M);
  ctx.closePath();
  ctx.fillStyle = COLORS.avatar;
  ctx.fill();
  ctx.restore();
}

function drawArrowChain(ctx: CanvasRenderingContext2D, cam: Camera, pts: Vec2[], tick: number): void {
  if (pts.length < 2) return;
  tracePoly(ctx, cam, pts, false);
  ctx.strokeStyle = COLORS.arrow;
  ctx.lineWidth = 2;
  ctx.globalAlpha = 0.5;
  ctx.stroke();
  ctx.globalAlpha = 1;
  // chevrons crawl along the chain, one per ~4 m, phase from the tick
  const phase = (tick % 24) / 24;
  let acc = 0;
  const spacing = 4;
  for (let i = 0; i + 1 < pts.length; i++) {
    const a = pts[i]!;
    const b = pts[i + 1]!;
    const segLen = Math.hypot(b[0] - a[0], b[1] - a[1]);
    const dirX = (b[0] - a[0]) / segLen;
    const dirY = (b[1] - a[1]) / segLen;
    for (let d = (spacing - (acc % spacing)) % spacing + phase * spacing; d < segLen; d += spacing) {
      const p: Vec2 = [a[0] + dirX * d, a[1] + dirY * d];
      drawChevron(ctx, cam, p, Math.atan2(dirX, dirY));
    }
    acc += segLen;
  }
}

function drawChevron(ctx: CanvasRenderingContext2D, cam: Camera, p: Vec2, rad: number): void {
  const [x, y] = toScreen(cam, p);
  ctx.save();
  ctx.translate(x, y);
  ctx.rotate(rad);
  ctx.beginPath();
  ctx.moveTo(-0.4 * PX_PER_M, 0.3 * PX_PER_M);
  ctx.lineTo(0, -0.3 * PX_PER_M);
  ctx.lineTo(0.4 * PX_PER_M, 0.3 * PX_PER_M);
  ctx.strokeStyle = COLORS.arrow;
  ctx.lineWidth = 3;
  ctx.stroke();
  ctx.restore();
}
