/**
 * Cockpit wiring: connects the link, input smoothing, state store,
 * and the canvas/DOM render loop.  No vehicle physics lives here;
 * every telemetry value on screen comes straight off the wire.
 */

import { BridgeLink } from "./net.js";
import { KeyTracker, Smoother, gamepadTargets } from "./input.js";
import { MODES, Mode, ServerMsg } from "./protocol.js";
import { SessionState } from "./state.js";
import { drawScene, drawSparkline, slipFraction } from "./render.js";

const state = new SessionState();
const keys = new KeyTracker();
const smoother = new Smoother();
let lastPump = performance.now();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element ${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("track-canvas");
const sparkOmega = el<HTMLCanvasElement>("spark-omega");
const sparkGamma = el<HTMLCanvasElement>("spark-gamma");
const modeBanner = el<HTMLDivElement>("mode-banner");
const delayBox = el<HTMLDivElement>("delay-box");
const statusOverlay = el<HTMLDivElement>("status-overlay");
const roleBadge = el<HTMLDivElement>("role-badge");
const progressBox = el<HTMLDivElement>("progress-box");
const errorBox = el<HTMLDivElement>("error-box");

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/teleop`;

const link = new BridgeLink(wsUrl, {
  onMessage(msg: ServerMsg): void {
    if (msg.type === "hello") state.applyHello(msg);
    else if (msg.type === "frame") state.applyFrame(msg);
    else state.applyError(msg.message);
  },
  onStatus(connected: boolean): void {
    state.connection = connected ? "open" : "closed";
  },
  command(): [number, number] {
    const now = performance.now();
    const dt = Math.min((now - lastPump) / 1000, 0.25);
    lastPump = now;
    const pads = typeof navigator.getGamepads === "function" ? navigator.getGamepads() : [];
    let target = keys.targets();
    for (const pad of pads) {
      if (pad === null) continue;
      const t = gamepadTargets(pad.axes.slice());
      if (t !== null) target = t;
    }
    smoother.step(target, dt);
    return [smoother.v, smoother.w];
  },
});

function setBar(id: string, frac: number, signed = false): void {
  const fill = el<HTMLDivElement>(id);
  if (signed) {
    const pct = Math.min(Math.abs(frac), 1) * 50;
    fill.style.width = `${pct}%`;
    fill.style.left = frac >= 0 ? "50%" : `${50 - pct}%`;
  } else {
    fill.style.width = `${Math.min(Math.max(frac, 0), 1) * 100}%`;
    fill.style.left = "0";
  }
}

function renderHud(): void {
  const f = state.frame;
  modeBanner.textContent = f === null ? "no telemetry" : f.mode.toUpperCase();
  modeBanner.className = `banner mode-${f === null ? "none" : f.mode}`;
  roleBadge.textContent = state.writer ? "driving" : "read-only";
  roleBadge.className = state.writer ? "badge writer" : "badge viewer";
  statusOverlay.classList.toggle("hidden", state.connection === "open");
  errorBox.textContent = state.lastError;

  for (const mode of MODES) {
    el<HTMLButtonElement>(`mode-${mode}`).classList.toggle(
      "active",
      f !== null && f.mode === mode,
    );
  }

  if (f === null) return;
  delayBox.textContent =
    `delay fwd ${f.delay.fwd.toFixed(2)}s / bwd ${f.delay.bwd.toFixed(2)}s` +
    `  backlog ${f.backlog.fwd}/${f.backlog.bwd}`;

  const sMax = state.track === null ? 0.6 : state.track.terrain.s_max;
  setBar("slip-r-fill", slipFraction(f.s_r, sMax));
  setBar("slip-l-fill", slipFraction(f.s_l, sMax));
  setBar("force-v-fill", f.feedback[0] / 4, true);
  setBar("force-w-fill", f.feedback[1] / 4, true);
  setBar("drive-v-fill", f.drive[0], true);
  setBar("drive-w-fill", f.drive[1], true);

  el<HTMLSpanElement>("omega-now").textContent =
    `${f.omega[0].toFixed(3)} / ${f.omega[1].toFixed(3)}`;
  el<HTMLSpanElement>("gamma-now").textContent =
    `${f.gamma[0].toFixed(3)} / ${f.gamma[1].toFixed(3)}`;

  const track = state.track;
  if (track !== null && track.length > 0) {
    const frac = Math.min(1, state.progress() / track.length);
    progressBox.textContent = `progress ${(frac * 100).toFixed(0)}%  t=${f.sim_time.toFixed(1)}s`;
  } else {
    progressBox.textContent = "";
  }
}

function frameLoop(): void {
  const ctx = canvas.getContext("2d");
  if (ctx !== null) {
    const rect = canvas.getBoundingClientRect();
    const w = Math.max(Math.floor(rect.width), 1);
    const h = Math.max(Math.floor(rect.height), 1);
    if (canvas.width !== w || canvas.height !== h) {
      canvas.width = w;
      canvas.height = h;
    }
    drawScene(ctx, state, canvas.width, canvas.height);
  }
  const so = sparkOmega.getContext("2d");
  if (so !== null) {
    drawSparkline(so, state.omegaV, sparkOmega.width, sparkOmega.height, "#53d3ff");
  }
  const sg = sparkGamma.getContext("2d");
  if (sg !== null) {
    drawSparkline(sg, state.gammaV, sparkGamma.width, sparkGamma.height, "#ffd166");
  }
  renderHud();
  requestAnimationFrame(frameLoop);
}

window.addEventListener("keydown", (ev) => {
  if (ev.repeat) return;
  if (keys.press(ev.code)) ev.preventDefault();
});
window.addEventListener("keyup", (ev) => {
  if (keys.release(ev.code)) ev.preventDefault();
});
window.addEventListener("blur", () => keys.clear());

for (const mode of MODES) {
  el<HTMLButtonElement>(`mode-${mode}`).addEventListener("click", () => {
    link.requestMode(mode as Mode);
  });
}

link.start();
requestAnimationFrame(frameLoop);
