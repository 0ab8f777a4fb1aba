/** Keyboard and gamepad mapping to input frames.
 *
 * Movement is avatar-local and unit-clamped: WASD or the left stick give a
 * vector whose length never exceeds 1. Rotation mirrors the server's edge
 * latch so the client predicts what the server will do: a press (or stick
 * flick) yields one step, holding yields nothing more, and swapping
 * direction without a release through neutral is ignored.
 */

import type { InputMsg, Vec2 } from "./protocol.js";

const MOVE_KEYS: Record<string, Vec2> = {
  KeyW: [0, 1],
  ArrowUp: [0, 1],
  KeyS: [0, -1],
  ArrowDown: [0, -1],
  KeyA: [-1, 0],
  ArrowLeft: [-1, 0],
  KeyD: [1, 0],
  ArrowRight: [1, 0],
};

const ROT_KEYS: Record<string, -1 | 1> = { KeyQ: -1, KeyE: 1 };
const ACT_KEYS = ["Space", "Enter"];

export const STICK_DEADZONE = 0.15;
export const ROT_FLICK = 0.6; // stick deflection that counts as a flick

/** One polled gamepad reading; axes follow the standard mapping. */
export interface GamepadSample {
  moveX: number;
  moveY: number;
  rotX: number;
  act: boolean;
}

export function unitClamp(v: Vec2): Vec2 {
  const n = Math.hypot(v[0], v[1]);
  return n > 1 ? [v[0] / n, v[1] / n] : v;
}

export class InputMapper {
  private held = new Set<string>();
  private rotLatched = false;
  private lastTick = -1;

  keyDown(code: string): void {
    this.held.add(code);
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  /** Whether a key code is bound at all (callers preventDefault on these). */
  isBound(code: string): boolean {
    return code in MOVE_KEYS || code in ROT_KEYS || ACT_KEYS.includes(code);
  }

  /** Builds the frame for a tick; null for a repeated or older tick, so
   *  frames always carry strictly increasing tick numbers. */
  frame(tick: number, pad?: GamepadSample): InputMsg | null {
    if (tick <= this.lastTick) return null;
    this.lastTick = tick;

    let mx = 0;
    let my = 0;
    for (const [code, [dx, dy]] of Object.entries(MOVE_KEYS)) {
      if (this.held.has(code)) {
        mx += dx;
        my += dy;
      }
    }
    if (pad) {
      if (Math.abs(pad.moveX) > STICK_DEADZONE) mx += pad.moveX;
      if (Math.abs(pad.moveY) > STICK_DEADZONE) my += pad.moveY;
    }
    const move = unitClamp([mx, my]);

    let dir: -1 | 0 | 1 = 0;
    for (const [code, d] of Object.entries(ROT_KEYS)) {
      if (this.held.has(code)) dir = d;
    }
    if (dir === 0 && pad) {
      if (pad.rotX > ROT_FLICK) dir = 1;
      else if (pad.rotX < -ROT_FLICK) dir = -1;
    }
    let rot: -1 | 0 | 1 = 0;
    if (dir !== 0) {
      if (!this.rotLatched) rot = dir;
      this.rotLatched = true;
    } else {
      this.rotLatched = false;
    }

    const act = ACT_KEYS.some((c) => this.held.has(c)) || (pad?.act ?? false);
    return { t: "input", tick, move, rot, act };
  }
}
