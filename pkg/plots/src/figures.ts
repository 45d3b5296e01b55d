/**
 * The three figure kinds rendered from conslab CSV artifacts:
 *
 *  - convergence: log-log residual-vs-h per quantity, fitted slope annotated
 *  - ratio_hist:  histogram of a measured-constant column with the sharp
 *                 reference line (1/(2*pi) for the sup constant)
 *  - sweep:       a quantity against a parameter, one series per grid size
 *
 * Rendering is a pure function of (CSV text, spec): identical inputs yield
 * identical bytes.
 */

import { column, parseCsv, requireColumns, textColumn } from "./csv.js";
import { PALETTE, Svg, esc, fmt, makeScale, plotRange } from "./svg.js";

export const SHARP_SUP = 1.0 / (2.0 * Math.PI);

export type FigureKind = "convergence" | "ratio_hist" | "sweep";

export interface FigureSpec {
  kind: FigureKind;
  csv: string; // path, resolved by the caller; rendering takes the text
  out: string;
  title?: string;
  /** ratio_hist: which column to bin (default ratio_sup) */
  column?: string;
  /** ratio_hist: reference line values (default [1/(2*pi)]) */
  reference_lines?: number[];
  /** sweep: x parameter column (default lam) */
  x?: string;
  /** sweep: y quantity column (default empirical_C) */
  y?: string;
  /** sweep: series column (default n) */
  series?: string;
  bins?: number;
}

export function fitSlope(hs: number[], values: number[]): number {
  const lx = hs.map(Math.log);
  const ly = values.map(Math.log);
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  return num / den;
}

export function renderFigure(spec: FigureSpec, csvText: string): string {
  switch (spec.kind) {
    case "convergence":
      return renderConvergence(spec, csvText);
    case "ratio_hist":
      return renderRatioHist(spec, csvText);
    case "sweep":
      return renderSweep(spec, csvText);
    default:
      throw new Error(`unknown figure kind '${(spec as FigureSpec).kind}'`);
  }
}

function groupBy(keys: string[]): Map<string, number[]> {
  const out = new Map<string, number[]>();
  keys.forEach((k, i) => {
    const bucket = out.get(k);
    if (bucket) bucket.push(i);
    else out.set(k, [i]);
  });
  return out;
}

export function renderConvergence(spec: FigureSpec, csvText: string): string {
  const table = parseCsv(csvText);
  requireColumns(table, ["quantity", "h", "value"]);
  const quantity = textColumn(table, "quantity");
  const h = column(table, "h");
  const value = column(table, "value");

  const svg = new Svg(spec.title ?? "refinement study (log-log)");
  const { x: xr, y: yr } = plotRange();
  const xs = makeScale(h, xr, true);
  const ys = makeScale(value.filter((v) => v > 0), yr, true);
  svg.axes(xs, ys, "grid spacing h", "residual");

  let ci = 0;
  const legendY = plotRange().y[1] + 8;
  for (const [name, idx] of groupBy(quantity)) {
    const color = PALETTE[ci % PALETTE.length];
    const pts = idx
      .map((i) => [h[i], value[i]] as [number, number])
      .filter(([, v]) => v > 0)
      .sort((a, b) => a[0] - b[0]);
    svg.polyline(pts.map(([a, b]) => [xs(a), ys(b)]), color);
    for (const [a, b] of pts) svg.circle(xs(a), ys(b), 3, color);
    const slope = fitSlope(pts.map((p) => p[0]), pts.map((p) => p[1]));
    svg.text(
      xr[0] + 10,
      legendY + 16 * ci,
      `${name}: slope ${slope.toFixed(2)}`,
      `fill="${color}"`,
    );
    ci += 1;
  }
  return svg.render();
}

export function renderRatioHist(spec: FigureSpec, csvText: string): string {
  const table = parseCsv(csvText);
  const col = spec.column ?? "ratio_sup";
  requireColumns(table, [col]);
  const values = column(table, col);
  const refs = spec.reference_lines ?? [SHARP_SUP];

  const svg = new Svg(spec.title ?? `${col} across the sweep`);
  const { x: xr, y: yr } = plotRange();
  const bins = spec.bins ?? 24;
  const xs = makeScale([0, ...values, ...refs], xr, false);
  const lo = 0;
  const hi = Math.max(...values, ...refs) * 1.05;
  const width = (hi - lo) / bins;
  const counts = new Array<number>(bins).fill(0);
  for (const v of values) {
    const b = Math.min(bins - 1, Math.floor((v - lo) / width));
    counts[b] += 1;
  }
  const ysc = makeScale([0, Math.max(...counts)], yr, false);
  svg.axes(xs, ysc, col, "count");
  for (let b = 0; b < bins; b++) {
    if (counts[b] === 0) continue;
    const x0 = xs(lo + b * width);
    const x1 = xs(lo + (b + 1) * width);
    svg.rect(x0, ysc(counts[b]), x1 - x0 - 1, ysc(0) - ysc(counts[b]),
      PALETTE[0], 'opacity="0.8"');
  }
  for (const r of refs) {
    const px = xs(r);
    svg.raw(
      `<line x1="${fmt(px)}" y1="${fmt(yr[1])}" x2="${fmt(px)}" y2="${fmt(yr[0])}" ` +
        `stroke="#d62728" stroke-dasharray="6 3" data-reference-value="${r.toFixed(5)}"/>`,
    );
    svg.text(px + 4, yr[1] + 14, `reference ${r.toFixed(5)}`, 'fill="#d62728"');
  }
  return svg.render();
}

export function renderSweep(spec: FigureSpec, csvText: string): string {
  const table = parseCsv(csvText);
  const xcol = spec.x ?? "lam";
  const ycol = spec.y ?? "empirical_C";
  const scol = spec.series ?? "n";
  requireColumns(table, [xcol, ycol, scol]);
  const xvals = column(table, xcol);
  const yvals = column(table, ycol);
  const series = textColumn(table, scol);

  const svg = new Svg(spec.title ?? `${ycol} vs ${xcol}`);
  const { x: xr, y: yr } = plotRange();
  const xs = makeScale(xvals, xr, false);
  const ys = makeScale(yvals, yr, false);
  svg.axes(xs, ys, xcol, ycol);
  let ci = 0;
  for (const [name, idx] of groupBy(series)) {
    const color = PALETTE[ci % PALETTE.length];
    const pts = idx
      .map((i) => [xvals[i], yvals[i]] as [number, number])
      .sort((a, b) => a[0] - b[0]);
    svg.polyline(pts.map(([a, b]) => [xs(a), ys(b)]), color);
    for (const [a, b] of pts) svg.circle(xs(a), ys(b), 3, color);
    svg.text(xr[0] + 10, yr[1] + 8 + 16 * ci, `${scol} = ${esc(name)}`,
      `fill="${color}"`);
    ci += 1;
  }
  return svg.render();
}
