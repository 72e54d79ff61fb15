/**
 * Wire protocol: typed views of the bridge's JSON messages plus the
 * validation the UI applies before trusting a frame.  Unknown fields are
 * ignored by design so schema additions on the server stay compatible.
 */

export const SCHEMA_VERSION = 1;

export type Mode = "ideal" | "delayed" | "predicted";
export const MODES: Mode[] = ["ideal", "delayed", "predicted"];

export interface TerrainInfo {
  z: number[];
  phi: number[];
  phi_min: number;
  phi_max: number;
  s_max: number;
}

export interface TrackInfo {
  id: string;
  length: number;
  width: number;
  centerline: [number, number][];
  terrain: TerrainInfo;
}

export interface Hello {
  type: "hello";
  schema: number;
  client_id: number;
  writer: boolean;
  track: TrackInfo;
}

export interface Frame {
  type: "frame";
  schema: number;
  seq: number;
  server_time: number;
  sim_time: number;
  mode: Mode;
  pose: [number, number, number];
  v_s: number;
  omega_s: number;
  s_r: number;
  s_l: number;
  x_m: [number, number];
  f_h: [number, number];
  feedback: [number, number];
  delay: { fwd: number; bwd: number };
  backlog: { fwd: number; bwd: number };
  omega: [number, number];
  gamma: [number, number];
  drive: [number, number];
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export type ServerMsg = Hello | Frame | ErrorMsg;

export interface CommandMsg {
  type: "cmd";
  seq: number;
  v: number;
  w: number;
  client_time: number;
}

export interface ModeMsg {
  type: "mode";
  mode: Mode;
  base_delay?: number;
  jitter?: number;
  seed?: number;
  predictor?: "conv" | "pilstm";
}

const isNum = (x: unknown): x is number =>
  typeof x === "number" && Number.isFinite(x);

const isPair = (x: unknown): x is [number, number] =>
  Array.isArray(x) && x.length >= 2 && isNum(x[0]) && isNum(x[1]);

function isTrack(x: unknown): x is TrackInfo {
  if (typeof x !== "object" || x === null) return false;
  const t = x as Record<string, unknown>;
  return (
    typeof t.id === "string" &&
    isNum(t.length) &&
    isNum(t.width) &&
    Array.isArray(t.centerline) &&
    t.centerline.length >= 2 &&
    t.centerline.every(isPair)
  );
}

/** Parse one server message; returns null for anything malformed. */
export function decodeServer(text: string): ServerMsg | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;

  if (msg.type === "error" && typeof msg.message === "string") {
    return { type: "error", message: msg.message };
  }
  if (msg.type === "hello") {
    if (
      msg.schema === SCHEMA_VERSION &&
      isNum(msg.client_id) &&
      typeof msg.writer === "boolean" &&
      isTrack(msg.track)
    ) {
      return msg as unknown as Hello;
    }
    return null;
  }
  if (msg.type === "frame") {
    const pair = (x: unknown): x is Record<string, unknown> =>
      typeof x === "object" && x !== null;
    const delay = pair(msg.delay) ? msg.delay : {};
    const backlog = pair(msg.backlog) ? msg.backlog : {};
    const ok =
      msg.schema === SCHEMA_VERSION &&
      isNum(msg.seq) &&
      isNum(msg.sim_time) &&
      MODES.includes(msg.mode as Mode) &&
      Array.isArray(msg.pose) &&
      msg.pose.length === 3 &&
      (msg.pose as unknown[]).every(isNum) &&
      isNum(msg.v_s) &&
      isNum(msg.s_r) &&
      isNum(msg.s_l) &&
      isPair(msg.x_m) &&
      isPair(msg.f_h) &&
      isPair(msg.feedback) &&
      isPair(msg.omega) &&
      isPair(msg.gamma) &&
      isPair(msg.drive) &&
      isNum(delay.fwd) &&
      isNum(delay.bwd) &&
      isNum(backlog.fwd) &&
      isNum(backlog.bwd);
    return ok ? (msg as unknown as Frame) : null;
  }
  return null;
}

const clamp1 = (x: number): number => Math.min(1, Math.max(-1, x));

/** Serialize a drive command; axes clamped to [-1, 1]. */
export function encodeCommand(seq: number, v: number, w: number, now: number): string {
  const msg: CommandMsg = {
    type: "cmd",
    seq,
    v: clamp1(v),
    w: clamp1(w),
    client_time: now,
  };
  return JSON.stringify(msg);
}

export function encodeMode(msg: ModeMsg): string {
  return JSON.stringify(msg);
}
