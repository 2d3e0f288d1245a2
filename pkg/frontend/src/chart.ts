/** Pure chart geometry: time/value scales and SVG path construction.
 * Quantile band vertices map 1:1 onto the response arrays — no smoothing,
 * no resampling — so what is drawn is exactly what the service returned. */

import { HORIZON } from "./types";

export interface Scales {
  width: number;
  height: number;
  tMin: number;   // minutes
  tMax: number;
  yMin: number;   // mmHg
  yMax: number;
}

export interface BandGeometry {
  path: string;
  upper: Array<[number, number]>;   // pixel vertices, one per step
  lower: Array<[number, number]>;
  upperValues: number[];            // the exact payload values used
  lowerValues: number[];
}

export function xPixel(s: Scales, minutes: number): number {
  return ((minutes - s.tMin) / (s.tMax - s.tMin)) * s.width;
}

export function yPixel(s: Scales, mmHg: number): number {
  return s.height - ((mmHg - s.yMin) / (s.yMax - s.yMin)) * s.height;
}

/** Context window occupies minutes 0..15, the forecast 15..30. */
export function stepToMinutes(step: number, forecast: boolean): number {
  return (forecast ? 15 : 0) + (step * 15) / HORIZON;
}

export function linePath(s: Scales, values: number[], forecast: boolean): string {
  return values
    .map((v, i) => {
      const cmd = i === 0 ? "M" : "L";
      return `${cmd}${xPixel(s, stepToMinutes(i, forecast)).toFixed(2)},${yPixel(s, v).toFixed(2)}`;
    })
    .join("");
}

/** Closed polygon through every (step, q90) then back through (step, q10). */
export function bandGeometry(s: Scales, q10: number[], q90: number[]): BandGeometry {
  const upper: Array<[number, number]> = q90.map((v, i) => [
    xPixel(s, stepToMinutes(i, true)),
    yPixel(s, v),
  ]);
  const lower: Array<[number, number]> = q10.map((v, i) => [
    xPixel(s, stepToMinutes(i, true)),
    yPixel(s, v),
  ]);
  const fwd = upper.map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`);
  const back = lower
    .slice()
    .reverse()
    .map(([x, y]) => `L${x.toFixed(2)},${y.toFixed(2)}`);
  return {
    path: fwd.join("") + back.join("") + "Z",
    upper,
    lower,
    upperValues: q90.slice(),
    lowerValues: q10.slice(),
  };
}

/** Step-function path for a P-level trajectory (for the editor lane). */
export function levelStepPath(s: Scales, pl: number[], levelToY: (l: number) => number): string {
  let d = "";
  for (let i = 0; i < pl.length; i++) {
    const x0 = xPixel(s, stepToMinutes(i, true));
    const x1 = xPixel(s, stepToMinutes(i + 1, true));
    const y = levelToY(pl[i]);
    d += (i === 0 ? `M${x0.toFixed(2)},${y.toFixed(2)}` : `L${x0.toFixed(2)},${y.toFixed(2)}`);
    d += `L${x1.toFixed(2)},${y.toFixed(2)}`;
  }
  return d;
}

/** Inverse mapping used by the drag editor: pixel position -> (step, level). */
export function pixelToStep(s: Scales, xPx: number): number {
  const minutes = s.tMin + (xPx / s.width) * (s.tMax - s.tMin);
  const step = Math.floor(((minutes - 15) / 15) * HORIZON);
  return Math.max(0, Math.min(HORIZON - 1, step));
}

export function pixelToLevel(yPx: number, laneTop: number, laneHeight: number): number {
  const frac = 1 - (yPx - laneTop) / laneHeight;
  return Math.max(1, Math.min(9, Math.round(1 + frac * 8)));
}
