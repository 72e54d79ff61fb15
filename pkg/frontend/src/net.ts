/**
 * WebSocket client: reconnecting link to the bridge plus the 20 Hz
 * command pump.  The pump only runs while this client holds the
 * writer slot; sequence numbers increase monotonically across
 * reconnects so the server never sees a stale command.
 */

import { decodeServer, encodeCommand, encodeMode, Mode, ServerMsg } from "./protocol.js";

export const COMMAND_HZ = 20;
const RECONNECT_MIN_MS = 500;
const RECONNECT_MAX_MS = 5000;

export interface LinkHooks {
  onMessage(msg: ServerMsg): void;
  onStatus(connected: boolean): void;
  /** Current smoothed drive command, polled at COMMAND_HZ. */
  command(): [number, number];
}

export class BridgeLink {
  private ws: WebSocket | null = null;
  private seq = 0;
  private writer = false;
  private timer: ReturnType<typeof setInterval> | null = null;
  private retryMs = RECONNECT_MIN_MS;
  private closed = false;

  constructor(private url: string, private hooks: LinkHooks) {}

  start(): void {
    this.closed = false;
    this.connect();
  }

  stop(): void {
    this.closed = true;
    this.stopPump();
    if (this.ws !== null) this.ws.close();
    this.ws = null;
  }

  requestMode(mode: Mode, overrides?: { base_delay?: number; jitter?: number }): void {
    if (this.ws !== null && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encodeMode({ type: "mode", mode, ...overrides }));
    }
  }

  private connect(): void {
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.retryMs = RECONNECT_MIN_MS;
      this.hooks.onStatus(true);
    };
    ws.onmessage = (ev) => {
      const msg = decodeServer(String(ev.data));
      if (msg === null) return;
      if (msg.type === "hello") {
        this.writer = msg.writer;
        if (this.writer) this.startPump();
      }
      this.hooks.onMessage(msg);
    };
    ws.onclose = () => {
      if (this.ws !== ws) return;
      this.stopPump();
      this.hooks.onStatus(false);
      if (!this.closed) this.scheduleReconnect();
    };
    ws.onerror = () => {
      ws.close();
    };
  }

  private scheduleReconnect(): void {
    const delay = this.retryMs;
    this.retryMs = Math.min(this.retryMs * 2, RECONNECT_MAX_MS);
    setTimeout(() => {
      if (!this.closed) this.connect();
    }, delay);
  }

  private startPump(): void {
    this.stopPump();
    this.timer = setInterval(() => {
      if (this.ws === null || this.ws.readyState !== WebSocket.OPEN) return;
      const [v, w] = this.hooks.command();
      this.seq += 1;
      this.ws.send(encodeCommand(this.seq, v, w, Date.now() / 1000));
    }, 1000 / COMMAND_HZ);
  }

  private stopPump(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
