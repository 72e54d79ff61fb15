import { describe, expect, it } from "vitest";
import { SPARK_CAPACITY, SessionState, projectOntoPolyline } from "../src/state.js";
import { makeFrame, makeHello } from "./helpers.js";

describe("SessionState", () => {
  it("adopts identity and track from hello", () => {
    const s = new SessionState();
    s.applyHello(makeHello({ writer: false, client_id: 42 }));
    expect(s.writer).toBe(false);
    expect(s.clientId).toBe(42);
    expect(s.track!.id).toBe("A");
  });

  it("grows the trail one point per frame", () => {
    const s = new SessionState();
    for (let i = 0; i < 25; i++) {
      s.applyFrame(makeFrame({ seq: i + 1, sim_time: 0.1 * (i + 1), pose: [i * 0.1, 0, 0] }));
    }
    expect(s.framesReceived).toBe(25);
    expect(s.trail.length).toBe(25);
    expect(s.trail[24][0]).toBeCloseTo(2.4, 9);
    expect(s.omegaV.length).toBe(25);
  });

  it("restarts the trail when sim_time jumps backward", () => {
    const s = new SessionState();
    s.applyFrame(makeFrame({ seq: 1, sim_time: 5.0 }));
    s.applyFrame(makeFrame({ seq: 2, sim_time: 5.1 }));
    s.applyFrame(makeFrame({ seq: 3, sim_time: 0.0, pose: [0, 0, 0] }));
    expect(s.trail.length).toBe(1);
    expect(s.gammaV.length).toBe(1);
    expect(s.framesReceived).toBe(3);
  });

  it("restarts the trail on a mode change", () => {
    const s = new SessionState();
    s.applyFrame(makeFrame({ seq: 1, sim_time: 1.0, mode: "delayed" }));
    s.applyFrame(makeFrame({ seq: 2, sim_time: 1.1, mode: "predicted" }));
    expect(s.trail.length).toBe(1);
  });

  it("bounds the sparkline series", () => {
    const s = new SessionState();
    for (let i = 0; i < SPARK_CAPACITY + 50; i++) {
      s.applyFrame(makeFrame({ seq: i + 1, sim_time: 0.1 * (i + 1), omega: [i, 0] }));
    }
    expect(s.omegaV.length).toBe(SPARK_CAPACITY);
    expect(s.omegaV[s.omegaV.length - 1]).toBe(SPARK_CAPACITY + 49);
  });

  it("stores the last error message", () => {
    const s = new SessionState();
    s.applyError("read-only client");
    expect(s.lastError).toBe("read-only client");
  });

  it("reports progress as centerline arclength", () => {
    const s = new SessionState();
    s.applyHello(makeHello());
    s.applyFrame(makeFrame({ pose: [4.0, 0.3, 0.0] }));
    expect(s.progress()).toBeCloseTo(4.0, 9);
  });
});

describe("projectOntoPolyline", () => {
  const line: [number, number][] = [
    [0, 0],
    [10, 0],
    [10, 5],
  ];

  it("projects onto the interior of a segment", () => {
    const [z, d] = projectOntoPolyline(line, 3.0, 2.0);
    expect(z).toBeCloseTo(3.0, 9);
    expect(d).toBeCloseTo(2.0, 9);
  });

  it("clamps before the start", () => {
    const [z, d] = projectOntoPolyline(line, -4.0, 0.0);
    expect(z).toBe(0);
    expect(d).toBeCloseTo(4.0, 9);
  });

  it("clamps past the end", () => {
    const [z, d] = projectOntoPolyline(line, 10.0, 9.0);
    expect(z).toBeCloseTo(15.0, 9);
    expect(d).toBeCloseTo(4.0, 9);
  });

  it("walks around the corner correctly", () => {
    const [z, d] = projectOntoPolyline(line, 10.2, 1.0);
    expect(z).toBeCloseTo(11.0, 9);
    expect(d).toBeCloseTo(0.2, 9);
  });

  it("arclength is monotone in travel along the path", () => {
    let prev = -1;
    for (let t = 0; t <= 1.0001; t += 0.05) {
      const x = t < 2 / 3 ? 15 * t : 10;
      const y = t < 2 / 3 ? 0.1 : (t - 2 / 3) * 15 + 0.0;
      const [z] = projectOntoPolyline(line, x, y);
      expect(z).toBeGreaterThanOrEqual(prev - 1e-9);
      prev = z;
    }
  });
});
