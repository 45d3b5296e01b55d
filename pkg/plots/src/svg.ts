/**
 * Deterministic SVG assembly: fixed canvas, fixed precision, no timestamps.
 */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { left: 70, right: 30, top: 40, bottom: 55 };

export function fmt(x: number): string {
  return Number.isInteger(x) ? x.toString() : x.toPrecision(6);
}

export interface Scale {
  (v: number): number;
  min: number;
  max: number;
  log: boolean;
}

export function makeScale(
  values: number[],
  range: [number, number],
  log: boolean,
): Scale {
  const finite = values.filter((v) => Number.isFinite(v) && (!log || v > 0));
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const t = (v: number) => (log ? Math.log10(v) : v);
  const pad = 0.06 * (t(hi) - t(lo)) || 0.5;
  const a = t(lo) - pad;
  const b = t(hi) + pad;
  const scale = ((v: number) =>
    range[0] + ((t(v) - a) / (b - a)) * (range[1] - range[0])) as Scale;
  scale.min = lo;
  scale.max = hi;
  scale.log = log;
  return scale;
}

export function ticks(scale: Scale, count = 5): number[] {
  if (scale.log) {
    const lo = Math.floor(Math.log10(scale.min));
    const hi = Math.ceil(Math.log10(scale.max));
    const out: number[] = [];
    for (let e = lo; e <= hi; e++) out.push(Math.pow(10, e));
    return out;
  }
  const span = scale.max - scale.min;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const mult = span / count / step > 5 ? 10 : span / count / step > 2 ? 5 : 2;
  const s = step * mult;
  const start = Math.ceil(scale.min / s) * s;
  const out: number[] = [];
  for (let v = start; v <= scale.max + 1e-12; v += s) out.push(v);
  return out;
}

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

export class Svg {
  parts: string[] = [];

  constructor(title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
        `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">${esc(title)}</text>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, opts = ""): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" ${opts}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="1.8"/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, opts = ""): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}" ${opts}/>`,
    );
  }

  text(x: number, y: number, s: string, opts = ""): void {
    this.parts.push(`<text x="${fmt(x)}" y="${fmt(y)}" font-size="12" ${opts}>${esc(s)}</text>`);
  }

  raw(s: string): void {
    this.parts.push(s);
  }

  axes(xs: Scale, ys: Scale, xlabel: string, ylabel: string): void {
    const { left, right, top, bottom } = MARGIN;
    const x0 = left;
    const x1 = WIDTH - right;
    const y0 = HEIGHT - bottom;
    const y1 = top;
    this.line(x0, y0, x1, y0, "#000");
    this.line(x0, y0, x0, y1, "#000");
    for (const v of ticks(xs)) {
      const px = xs(v);
      if (px < x0 - 1 || px > x1 + 1) continue;
      this.line(px, y0, px, y0 + 5, "#000");
      this.text(px, y0 + 18, xs.log ? `1e${Math.round(Math.log10(v))}` : fmt(v),
        'text-anchor="middle"');
    }
    for (const v of ticks(ys)) {
      const py = ys(v);
      if (py > y0 + 1 || py < y1 - 1) continue;
      this.line(x0 - 5, py, x0, py, "#000");
      this.text(x0 - 8, py + 4, ys.log ? `1e${Math.round(Math.log10(v))}` : fmt(v),
        'text-anchor="end"');
    }
    this.text((x0 + x1) / 2, HEIGHT - 12, xlabel, 'text-anchor="middle"');
    this.raw(
      `<text x="18" y="${(y0 + y1) / 2}" font-size="12" text-anchor="middle" ` +
        `transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(ylabel)}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function plotRange(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}
