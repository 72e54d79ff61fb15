/**
 * Drive input: keyboard and gamepad mapped to smoothed (v, w) axes.
 *
 * Keys set a target of -1/0/+1 per axis; the smoothed value slews
 * toward the target at a fixed rate so a held key reaches full scale in
 * RAMP_S seconds and a release decays back to zero at the same rate.
 * The smoother is a pure function of (state, dt) and carries no timers,
 * which keeps it testable and frame-rate independent.
 */

export const RAMP_S = 0.5;

export interface AxisTargets {
  v: number;
  w: number;
}

const KEY_CODES = new Set([
  "ArrowUp",
  "ArrowDown",
  "ArrowLeft",
  "ArrowRight",
  "KeyW",
  "KeyA",
  "KeyS",
  "KeyD",
]);

export class KeyTracker {
  private down = new Set<string>();

  /** Returns whether the code is one this tracker maps. */
  press(code: string): boolean {
    if (!KEY_CODES.has(code)) return false;
    this.down.add(code);
    return true;
  }

  release(code: string): boolean {
    if (!KEY_CODES.has(code)) return false;
    this.down.delete(code);
    return true;
  }

  clear(): void {
    this.down.clear();
  }

  /** Current target per axis from whichever keys are held. */
  targets(): AxisTargets {
    const has = (...codes: string[]) => codes.some((c) => this.down.has(c));
    let v = 0;
    let w = 0;
    if (has("ArrowUp", "KeyW")) v += 1;
    if (has("ArrowDown", "KeyS")) v -= 1;
    // left turn is positive w on the vehicle's convention
    if (has("ArrowLeft", "KeyA")) w += 1;
    if (has("ArrowRight", "KeyD")) w -= 1;
    return { v, w };
  }
}

export class Smoother {
  v = 0;
  w = 0;

  /** Advance both axes toward the target by dt seconds of slew. */
  step(target: AxisTargets, dt: number): void {
    const rate = dt / RAMP_S;
    this.v = slew(this.v, clamp1(target.v), rate);
    this.w = slew(this.w, clamp1(target.w), rate);
  }

  reset(): void {
    this.v = 0;
    this.w = 0;
  }
}

function slew(value: number, target: number, maxStep: number): number {
  const delta = target - value;
  if (Math.abs(delta) <= maxStep) return target;
  return value + Math.sign(delta) * maxStep;
}

const clamp1 = (x: number): number => Math.min(1, Math.max(-1, x));

/** Gamepad axes override the keyboard when a pad reports movement. */
export function gamepadTargets(axes: ReadonlyArray<number>, dead = 0.1): AxisTargets | null {
  if (axes.length < 2) return null;
  const v = -axes[1]; // stick forward is negative Y
  const w = -axes[0];
  if (Math.abs(v) < dead && Math.abs(w) < dead) return null;
  return { v: clamp1(v), w: clamp1(w) };
}
