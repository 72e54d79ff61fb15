/**
 * Session state: everything the renderer reads, built purely from
 * received messages.  No physics, no extrapolation; a replayed frame
 * log reproduces the same state sequence.
 */

import type { Frame, Hello, TrackInfo } from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";

export const SPARK_CAPACITY = 300;

export interface Series {
  values: number[];
}

export class SessionState {
  connection: Connection = "connecting";
  writer = false;
  clientId = 0;
  track: TrackInfo | null = null;
  frame: Frame | null = null;
  framesReceived = 0;
  trail: [number, number][] = [];
  omegaV: number[] = [];
  omegaW: number[] = [];
  gammaV: number[] = [];
  gammaW: number[] = [];
  lastError = "";

  applyHello(msg: Hello): void {
    this.writer = msg.writer;
    this.clientId = msg.client_id;
    this.track = msg.track;
  }

  /**
   * Fold one frame in.  A jump of sim_time back toward zero means the
   * server rebuilt the run (mode switch), so the trail and the metric
   * series restart with it.
   */
  applyFrame(msg: Frame): void {
    const prev = this.frame;
    if (prev !== null && (msg.sim_time < prev.sim_time || msg.mode !== prev.mode)) {
      this.trail = [];
      this.omegaV = [];
      this.omegaW = [];
      this.gammaV = [];
      this.gammaW = [];
    }
    this.frame = msg;
    this.framesReceived += 1;
    this.trail.push([msg.pose[0], msg.pose[1]]);
    pushBounded(this.omegaV, msg.omega[0]);
    pushBounded(this.omegaW, msg.omega[1]);
    pushBounded(this.gammaV, msg.gamma[0]);
    pushBounded(this.gammaW, msg.gamma[1]);
  }

  applyError(message: string): void {
    this.lastError = message;
  }

  /** Progress along the track, from projecting the pose onto the centerline. */
  progress(): number {
    if (this.frame === null || this.track === null) return 0;
    const [z] = projectOntoPolyline(this.track.centerline, this.frame.pose[0], this.frame.pose[1]);
    return z;
  }
}

function pushBounded(arr: number[], value: number): void {
  arr.push(value);
  if (arr.length > SPARK_CAPACITY) arr.shift();
}

/**
 * Nearest point on a polyline: returns [arclength, distance].  Used for
 * the progress readout only; the vehicle itself is drawn at its pose.
 */
export function projectOntoPolyline(
  pts: [number, number][],
  x: number,
  y: number,
): [number, number] {
  let bestZ = 0;
  let bestD = Infinity;
  let acc = 0;
  for (let i = 0; i + 1 < pts.length; i++) {
    const [ax, ay] = pts[i];
    const [bx, by] = pts[i + 1];
    const dx = bx - ax;
    const dy = by - ay;
    const len2 = dx * dx + dy * dy;
    const seg = Math.sqrt(len2);
    let t = 0;
    if (len2 > 0) {
      t = ((x - ax) * dx + (y - ay) * dy) / len2;
      t = Math.min(1, Math.max(0, t));
    }
    const px = ax + t * dx;
    const py = ay + t * dy;
    const d = Math.hypot(x - px, y - py);
    if (d < bestD) {
      bestD = d;
      bestZ = acc + t * seg;
    }
    acc += seg;
  }
  return [bestZ, bestD];
}
