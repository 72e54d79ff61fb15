import type { Frame, Hello } from "../src/protocol.js";

export function makeHello(overrides: Partial<Hello> = {}): Hello {
  return {
    type: "hello",
    schema: 1,
    client_id: 1,
    writer: true,
    track: {
      id: "A",
      length: 10,
      width: 2,
      centerline: [
        [0, 0],
        [5, 0],
        [10, 0],
      ],
      terrain: {
        z: [0, 10],
        phi: [0.3, 0.9],
        phi_min: 0.25,
        phi_max: 1.0,
        s_max: 0.6,
      },
    },
    ...overrides,
  };
}

export function makeFrame(overrides: Partial<Frame> = {}): Frame {
  return {
    type: "frame",
    schema: 1,
    seq: 1,
    server_time: 123.0,
    sim_time: 0.1,
    mode: "delayed",
    pose: [0.5, 0.0, 0.0],
    v_s: 0.2,
    omega_s: 0.0,
    s_r: 0.05,
    s_l: 0.04,
    x_m: [0.2, 0.0],
    f_h: [0.0, 0.0],
    feedback: [0.1, 0.0],
    delay: { fwd: 1.0, bwd: 1.0 },
    backlog: { fwd: 10, bwd: 10 },
    omega: [0.01, 0.0],
    gamma: [0.02, 0.0],
    drive: [0.5, 0.0],
    ...overrides,
  };
}

export function frameJson(overrides: Partial<Frame> = {}): string {
  return JSON.stringify(makeFrame(overrides));
}

export function helloJson(overrides: Partial<Hello> = {}): string {
  return JSON.stringify(makeHello(overrides));
}
