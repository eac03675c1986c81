/** Best-fitness sparkline geometry. Pure coordinate mapping: lower
 * fitness plots lower on the chart, so an elitist run draws a
 * non-increasing staircase. */

import type { SparkPoint } from "./state.js";

export function sparklineCoords(
  series: SparkPoint[],
  width: number,
  height: number,
  pad = 2,
): [number, number][] {
  if (series.length === 0) return [];
  const gens = series.map((p) => p.generation);
  const bests = series.map((p) => p.best);
  const gMin = Math.min(...gens);
  const gMax = Math.max(...gens);
  const bMin = Math.min(...bests);
  const bMax = Math.max(...bests);
  const gSpan = gMax - gMin || 1;
  const bSpan = bMax - bMin || 1;
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  return series.map((p) => [
    pad + ((p.generation - gMin) / gSpan) * innerW,
    pad + ((bMax - p.best) / bSpan) * innerH,
  ]);
}

export function sparklineSvg(series: SparkPoint[], width = 220, height = 48): string {
  const coords = sparklineCoords(series, width, height);
  const points = coords.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
  return (
    `<svg viewBox="0 0 ${width} ${height}" class="sparkline" ` +
    `preserveAspectRatio="none" role="img">` +
    `<polyline points="${points}" fill="none" />` +
    `</svg>`
  );
}
