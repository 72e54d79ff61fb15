/**
 * Canvas rendering: top-down track view plus sparklines.  Everything
 * here is a pure function of the session state; the transform helpers
 * are exported separately so the geometry is testable without a DOM.
 */

import type { TerrainInfo, TrackInfo } from "./protocol.js";
import type { SessionState } from "./state.js";

export interface Viewport {
  scale: number;
  offX: number;
  offY: number;
  height: number;
}

export type Bounds = [number, number, number, number]; // minx miny maxx maxy

export function trackBounds(track: TrackInfo): Bounds {
  let minx = Infinity;
  let miny = Infinity;
  let maxx = -Infinity;
  let maxy = -Infinity;
  for (const [x, y] of track.centerline) {
    minx = Math.min(minx, x);
    miny = Math.min(miny, y);
    maxx = Math.max(maxx, x);
    maxy = Math.max(maxy, y);
  }
  const m = track.width; // corridor half-width on both sides plus slack
  return [minx - m, miny - m, maxx + m, maxy + m];
}

/** Uniform-scale fit of world bounds into a w x h canvas. */
export function fitTransform(bounds: Bounds, w: number, h: number, pad = 10): Viewport {
  const [minx, miny, maxx, maxy] = bounds;
  const spanX = Math.max(maxx - minx, 1e-9);
  const spanY = Math.max(maxy - miny, 1e-9);
  const scale = Math.min((w - 2 * pad) / spanX, (h - 2 * pad) / spanY);
  const offX = pad + ((w - 2 * pad) - spanX * scale) / 2 - minx * scale;
  const offY = pad + ((h - 2 * pad) - spanY * scale) / 2 - miny * scale;
  return { scale, offX, offY, height: h };
}

/** World to screen; the y axis flips so +y points up on screen. */
export function worldToScreen(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.offX + x * vp.scale, vp.height - (vp.offY + y * vp.scale)];
}

/** Piecewise-linear softness at arclength z, clamped to the profile ends. */
export function phiAt(terrain: TerrainInfo, z: number): number {
  const zs = terrain.z;
  const ps = terrain.phi;
  if (zs.length === 0) return terrain.phi_max;
  if (z <= zs[0]) return ps[0];
  for (let i = 0; i + 1 < zs.length; i++) {
    if (z <= zs[i + 1]) {
      const t = (z - zs[i]) / Math.max(zs[i + 1] - zs[i], 1e-12);
      return ps[i] + t * (ps[i + 1] - ps[i]);
    }
  }
  return ps[ps.length - 1];
}

/** Firm ground renders slate; the softest ground renders sand. */
export function terrainColor(phi: number, phiMin: number, phiMax: number): string {
  const span = Math.max(phiMax - phiMin, 1e-12);
  const soft = Math.min(1, Math.max(0, (phiMax - phi) / span));
  const lerp = (a: number, b: number) => Math.round(a + (b - a) * soft);
  return `rgb(${lerp(73, 194)}, ${lerp(80, 158)}, ${lerp(87, 98)})`;
}

/** Bar fill fraction for a slip ratio, saturating at the terrain maximum. */
export function slipFraction(s: number, sMax: number): number {
  if (sMax <= 0) return 0;
  return Math.min(1, Math.max(0, s / sMax));
}

interface Ctx2d {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  save(): void;
  restore(): void;
  setLineDash(segments: number[]): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  lineCap: string;
}

function polylineArclengths(pts: [number, number][]): number[] {
  const z = [0];
  for (let i = 1; i < pts.length; i++) {
    z.push(z[i - 1] + Math.hypot(pts[i][0] - pts[i - 1][0], pts[i][1] - pts[i - 1][1]));
  }
  return z;
}

export function drawScene(ctx: Ctx2d, state: SessionState, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#10131a";
  ctx.fillRect(0, 0, w, h);
  const track = state.track;
  if (track === null) return;

  const vp = fitTransform(trackBounds(track), w, h);
  const pts = track.centerline;
  const zs = polylineArclengths(pts);

  // corridor, segment by segment so the softness shading follows phi(z)
  ctx.lineCap = "round";
  ctx.lineWidth = Math.max(track.width * vp.scale, 2);
  for (let i = 0; i + 1 < pts.length; i++) {
    const zMid = (zs[i] + zs[i + 1]) / 2;
    const phi = phiAt(track.terrain, zMid);
    ctx.strokeStyle = terrainColor(phi, track.terrain.phi_min, track.terrain.phi_max);
    ctx.beginPath();
    const [ax, ay] = worldToScreen(vp, pts[i][0], pts[i][1]);
    const [bx, by] = worldToScreen(vp, pts[i + 1][0], pts[i + 1][1]);
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
  }

  // centerline
  ctx.lineWidth = 1;
  ctx.strokeStyle = "rgba(255,255,255,0.35)";
  ctx.setLineDash([6, 6]);
  ctx.beginPath();
  pts.forEach(([x, y], i) => {
    const [sx, sy] = worldToScreen(vp, x, y);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
  ctx.setLineDash([]);

  // start and finish marks
  const [s0x, s0y] = worldToScreen(vp, pts[0][0], pts[0][1]);
  ctx.fillStyle = "#3ddc84";
  ctx.beginPath();
  ctx.arc(s0x, s0y, 5, 0, Math.PI * 2);
  ctx.fill();
  const last = pts[pts.length - 1];
  const [e0x, e0y] = worldToScreen(vp, last[0], last[1]);
  ctx.fillStyle = "#ff5470";
  ctx.beginPath();
  ctx.arc(e0x, e0y, 5, 0, Math.PI * 2);
  ctx.fill();

  // pose trail
  if (state.trail.length > 1) {
    ctx.strokeStyle = "#53d3ff";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    state.trail.forEach(([x, y], i) => {
      const [sx, sy] = worldToScreen(vp, x, y);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.stroke();
  }

  // the vehicle: a triangle at the latest pose the operator may see
  const frame = state.frame;
  if (frame !== null) {
    const [px, py, heading] = frame.pose;
    const [cx, cy] = worldToScreen(vp, px, py);
    const r = Math.max(6, 0.35 * vp.scale);
    ctx.fillStyle = "#ffd166";
    ctx.beginPath();
    // screen-space heading: world y is flipped, so the angle negates
    const a = -heading;
    ctx.moveTo(cx + r * Math.cos(a), cy + r * Math.sin(a));
    ctx.lineTo(cx + r * Math.cos(a + 2.5), cy + r * Math.sin(a + 2.5));
    ctx.lineTo(cx + r * Math.cos(a - 2.5), cy + r * Math.sin(a - 2.5));
    ctx.closePath();
    ctx.fill();
  }
}

/** Stroke a rolling series into a small canvas, auto-scaled to its range. */
export function drawSparkline(
  ctx: Ctx2d,
  values: number[],
  w: number,
  h: number,
  color: string,
): void {
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#161a23";
  ctx.fillRect(0, 0, w, h);
  if (values.length < 2) return;
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    lo = Math.min(lo, v);
    hi = Math.max(hi, v);
  }
  const span = Math.max(hi - lo, 1e-9);
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.beginPath();
  values.forEach((v, i) => {
    const x = (i / (values.length - 1)) * (w - 2) + 1;
    const y = h - 2 - ((v - lo) / span) * (h - 4);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}
