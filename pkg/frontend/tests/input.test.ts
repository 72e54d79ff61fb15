import { describe, expect, it } from "vitest";
import { KeyTracker, RAMP_S, Smoother, gamepadTargets } from "../src/input.js";

describe("KeyTracker", () => {
  it("maps WASD and arrows onto the two axes", () => {
    const k = new KeyTracker();
    expect(k.press("KeyW")).toBe(true);
    expect(k.targets()).toEqual({ v: 1, w: 0 });
    k.press("KeyA");
    expect(k.targets()).toEqual({ v: 1, w: 1 });
    k.release("KeyW");
    k.press("ArrowDown");
    expect(k.targets()).toEqual({ v: -1, w: 1 });
    k.clear();
    expect(k.targets()).toEqual({ v: 0, w: 0 });
  });

  it("opposing keys cancel", () => {
    const k = new KeyTracker();
    k.press("ArrowLeft");
    k.press("ArrowRight");
    expect(k.targets()).toEqual({ v: 0, w: 0 });
  });

  it("ignores unmapped codes", () => {
    const k = new KeyTracker();
    expect(k.press("KeyQ")).toBe(false);
    expect(k.release("Escape")).toBe(false);
    expect(k.targets()).toEqual({ v: 0, w: 0 });
  });
});

describe("Smoother", () => {
  it("reaches full scale within the ramp time at 50 Hz", () => {
    const s = new Smoother();
    const dt = 0.02;
    let t = 0;
    while (t < RAMP_S + 1e-9) {
      s.step({ v: 1, w: 0 }, dt);
      t += dt;
    }
    expect(s.v).toBeCloseTo(1, 9);
    expect(s.w).toBe(0);
  });

  it("is still ramping halfway through", () => {
    const s = new Smoother();
    for (let i = 0; i < 12; i++) s.step({ v: 1, w: 1 }, 0.02); // 0.24 s held
    expect(s.v).toBeGreaterThan(0.3);
    expect(s.v).toBeLessThan(0.75);
  });

  it("decays back to zero on release at the same rate", () => {
    const s = new Smoother();
    for (let i = 0; i < 50; i++) s.step({ v: 1, w: -1 }, 0.02);
    let t = 0;
    while (t < RAMP_S + 1e-9) {
      s.step({ v: 0, w: 0 }, 0.02);
      t += 0.02;
    }
    expect(s.v).toBeCloseTo(0, 9);
    expect(s.w).toBeCloseTo(0, 9);
  });

  it("clamps targets outside the unit box", () => {
    const s = new Smoother();
    for (let i = 0; i < 200; i++) s.step({ v: 5, w: -5 }, 0.02);
    expect(s.v).toBe(1);
    expect(s.w).toBe(-1);
  });

  it("reset zeroes the held command instantly", () => {
    const s = new Smoother();
    for (let i = 0; i < 50; i++) s.step({ v: 1, w: 1 }, 0.02);
    s.reset();
    expect(s.v).toBe(0);
    expect(s.w).toBe(0);
  });

  it("is frame-rate independent for a full ramp", () => {
    const coarse = new Smoother();
    for (let i = 0; i < 5; i++) coarse.step({ v: 1, w: 0 }, 0.1);
    const fine = new Smoother();
    for (let i = 0; i < 500; i++) fine.step({ v: 1, w: 0 }, 0.001);
    expect(coarse.v).toBeCloseTo(fine.v, 9);
  });
});

describe("gamepadTargets", () => {
  it("returns null inside the deadzone", () => {
    expect(gamepadTargets([0.05, -0.03])).toBeNull();
  });

  it("maps stick forward (negative Y) to positive v", () => {
    const t = gamepadTargets([0.0, -1.0]);
    expect(t).not.toBeNull();
    expect(t!.v).toBeCloseTo(1, 9);
  });

  it("maps left deflection to positive turn rate", () => {
    const t = gamepadTargets([-0.8, 0.0]);
    expect(t).not.toBeNull();
    expect(t!.w).toBeCloseTo(0.8, 9);
  });

  it("rejects a short axes array", () => {
    expect(gamepadTargets([0.5])).toBeNull();
  });
});
