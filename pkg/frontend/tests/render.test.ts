import { describe, expect, it } from "vitest";
import {
  drawScene,
  drawSparkline,
  fitTransform,
  phiAt,
  slipFraction,
  terrainColor,
  trackBounds,
  worldToScreen,
} from "../src/render.js";
import { SessionState } from "../src/state.js";
import { makeFrame, makeHello } from "./helpers.js";

const terrain = makeHello().track.terrain;

class FakeCtx {
  calls: string[] = [];
  strokeStyle: string = "";
  fillStyle: string = "";
  lineWidth = 0;
  lineCap = "";
  clearRect() {
    this.calls.push("clearRect");
  }
  beginPath() {
    this.calls.push("beginPath");
  }
  moveTo() {
    this.calls.push("moveTo");
  }
  lineTo() {
    this.calls.push("lineTo");
  }
  arc() {
    this.calls.push("arc");
  }
  closePath() {
    this.calls.push("closePath");
  }
  stroke() {
    this.calls.push("stroke");
  }
  fill() {
    this.calls.push("fill");
  }
  save() {
    this.calls.push("save");
  }
  restore() {
    this.calls.push("restore");
  }
  setLineDash() {
    this.calls.push("setLineDash");
  }
  fillRect() {
    this.calls.push("fillRect");
  }
  count(name: string): number {
    return this.calls.filter((c) => c === name).length;
  }
}

describe("transforms", () => {
  const track = makeHello().track;

  it("track bounds include the corridor margin", () => {
    const [minx, miny, maxx, maxy] = trackBounds(track);
    expect(minx).toBeLessThanOrEqual(-track.width);
    expect(maxx).toBeGreaterThanOrEqual(10 + track.width);
    expect(miny).toBeLessThan(0);
    expect(maxy).toBeGreaterThan(0);
  });

  it("fits world bounds inside the canvas with padding", () => {
    const bounds = trackBounds(track);
    const vp = fitTransform(bounds, 800, 400, 10);
    for (const [x, y] of [
      [bounds[0], bounds[1]],
      [bounds[2], bounds[3]],
      [bounds[0], bounds[3]],
      [bounds[2], bounds[1]],
    ] as [number, number][]) {
      const [sx, sy] = worldToScreen(vp, x, y);
      expect(sx).toBeGreaterThanOrEqual(9.999);
      expect(sx).toBeLessThanOrEqual(790.001);
      expect(sy).toBeGreaterThanOrEqual(9.999);
      expect(sy).toBeLessThanOrEqual(390.001);
    }
  });

  it("flips the y axis so +y is up on screen", () => {
    const vp = fitTransform([0, 0, 10, 10], 100, 100);
    const [, lowY] = worldToScreen(vp, 5, 0);
    const [, highY] = worldToScreen(vp, 5, 10);
    expect(highY).toBeLessThan(lowY);
  });

  it("uses one uniform scale for both axes", () => {
    const vp = fitTransform([0, 0, 20, 5], 200, 200);
    const [x0] = worldToScreen(vp, 0, 0);
    const [x1] = worldToScreen(vp, 1, 0);
    const [, y0] = worldToScreen(vp, 0, 0);
    const [, y1] = worldToScreen(vp, 0, 1);
    expect(Math.abs(x1 - x0)).toBeCloseTo(Math.abs(y0 - y1), 9);
  });
});

describe("terrain helpers", () => {
  it("interpolates softness linearly between knots", () => {
    expect(phiAt(terrain, 0)).toBeCloseTo(0.3, 12);
    expect(phiAt(terrain, 10)).toBeCloseTo(0.9, 12);
    expect(phiAt(terrain, 5)).toBeCloseTo(0.6, 12);
  });

  it("clamps outside the profile", () => {
    expect(phiAt(terrain, -3)).toBeCloseTo(0.3, 12);
    expect(phiAt(terrain, 40)).toBeCloseTo(0.9, 12);
  });

  it("colors firm ground slate and soft ground sand", () => {
    expect(terrainColor(1.0, 0.25, 1.0)).toBe("rgb(73, 80, 87)");
    expect(terrainColor(0.25, 0.25, 1.0)).toBe("rgb(194, 158, 98)");
    const mid = terrainColor(0.625, 0.25, 1.0);
    expect(mid).toMatch(/^rgb\(1[23]\d, /);
  });

  it("slip bars saturate at the terrain maximum", () => {
    expect(slipFraction(0, 0.6)).toBe(0);
    expect(slipFraction(0.3, 0.6)).toBeCloseTo(0.5, 12);
    expect(slipFraction(0.9, 0.6)).toBe(1);
    expect(slipFraction(-0.1, 0.6)).toBe(0);
    expect(slipFraction(0.5, 0)).toBe(0);
  });
});

describe("drawScene", () => {
  it("paints only the backdrop without a track", () => {
    const ctx = new FakeCtx();
    drawScene(ctx as never, new SessionState(), 640, 480);
    expect(ctx.count("fillRect")).toBe(1);
    expect(ctx.count("stroke")).toBe(0);
  });

  it("draws corridor, marks, trail, and vehicle once telemetry flows", () => {
    const s = new SessionState();
    s.applyHello(makeHello());
    for (let i = 0; i < 10; i++) {
      s.applyFrame(makeFrame({ seq: i + 1, sim_time: 0.1 * (i + 1), pose: [i * 0.2, 0, 0] }));
    }
    const ctx = new FakeCtx();
    drawScene(ctx as never, s, 640, 480);
    const segs = makeHello().track.centerline.length - 1;
    // corridor per segment + centerline + trail
    expect(ctx.count("stroke")).toBe(segs + 2);
    // start mark, end mark, vehicle triangle
    expect(ctx.count("fill")).toBe(3);
    expect(ctx.count("closePath")).toBe(1);
  });
});

describe("drawSparkline", () => {
  it("skips the path until two samples exist", () => {
    const ctx = new FakeCtx();
    drawSparkline(ctx as never, [1], 220, 48, "#fff");
    expect(ctx.count("stroke")).toBe(0);
  });

  it("strokes one path for a filled series", () => {
    const ctx = new FakeCtx();
    drawSparkline(ctx as never, [0, 1, 0.5, 2, -1], 220, 48, "#fff");
    expect(ctx.count("stroke")).toBe(1);
    expect(ctx.count("moveTo")).toBe(1);
    expect(ctx.count("lineTo")).toBe(4);
  });

  it("handles a constant series without dividing by zero", () => {
    const ctx = new FakeCtx();
    drawSparkline(ctx as never, [3, 3, 3, 3], 220, 48, "#fff");
    expect(ctx.count("stroke")).toBe(1);
  });
});
