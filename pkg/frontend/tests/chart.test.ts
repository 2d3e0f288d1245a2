import { describe, expect, it } from "vitest";

import { Scales, bandGeometry, linePath, pixelToLevel, pixelToStep, stepToMinutes, xPixel, yPixel } from "../src/chart";
import { HORIZON } from "../src/types";

const S: Scales = { width: 900, height: 300, tMin: 0, tMax: 30, yMin: 20, yMax: 160 };

describe("band geometry", () => {
  it("keeps one vertex per payload value, no smoothing", () => {
    const q10 = Array.from({ length: HORIZON }, (_, i) => 60 + 0.1 * i);
    const q90 = Array.from({ length: HORIZON }, (_, i) => 80 + 0.2 * i);
    const band = bandGeometry(S, q10, q90);
    expect(band.upper.length).toBe(HORIZON);
    expect(band.lower.length).toBe(HORIZON);
    expect(band.upperValues).toEqual(q90);
    expect(band.lowerValues).toEqual(q10);
    // vertices sit exactly at the scale mapping of the payload values
    for (let i = 0; i < HORIZON; i++) {
      expect(band.upper[i][0]).toBeCloseTo(xPixel(S, stepToMinutes(i, true)), 10);
      expect(band.upper[i][1]).toBeCloseTo(yPixel(S, q90[i]), 10);
      expect(band.lower[i][1]).toBeCloseTo(yPixel(S, q10[i]), 10);
    }
    // closed polygon: 2 * HORIZON vertices plus the closing command
    expect(band.path.match(/[ML]/g)?.length).toBe(2 * HORIZON);
    expect(band.path.endsWith("Z")).toBe(true);
  });

  it("collapses onto the mean line when q10 = q50 = q90", () => {
    const flat = new Array(HORIZON).fill(95);
    const band = bandGeometry(S, flat, flat);
    for (let i = 0; i < HORIZON; i++) {
      expect(band.upper[i][1]).toBe(band.lower[i][1]);
    }
    const mean = linePath(S, flat, true);
    expect(mean.startsWith("M")).toBe(true);
  });
});

describe("editor pixel mapping", () => {
  it("pixel -> step is clamped to the forecast window", () => {
    expect(pixelToStep(S, 0)).toBe(0);            // context region clamps to 0
    expect(pixelToStep(S, S.width)).toBe(HORIZON - 1);
    const mid = xPixel(S, stepToMinutes(45, true));
    expect(pixelToStep(S, mid)).toBe(45);
  });

  it("pixel -> level covers 1..9 top to bottom", () => {
    expect(pixelToLevel(0, 0, 100)).toBe(9);
    expect(pixelToLevel(100, 0, 100)).toBe(1);
    expect(pixelToLevel(50, 0, 100)).toBe(5);
  });

  it("round-trips steps through minutes", () => {
    for (const step of [0, 1, 44, 89]) {
      const x = xPixel(S, stepToMinutes(step, true));
      expect(pixelToStep(S, x + 1e-6)).toBe(step);
    }
  });
});
