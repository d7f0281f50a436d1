/** Minimal deterministic SVG builder: fixed canvas, fixed fonts, numbers
 * formatted with a fixed precision so identical inputs give identical
 * bytes. */

export const WIDTH = 860;
export const HEIGHT = 600;
export const MARGIN = { left: 70, right: 25, top: 40, bottom: 55 };

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const v = Math.abs(x) < 1e-12 ? 0 : x;
  return v.toFixed(3).replace(/\.?0+$/, "") || "0";
}

export interface Scale {
  (x: number): number;
  domain: [number, number];
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  const f = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  f.domain = [d0, d1];
  return f;
}

export function extent(values: number[], pad = 0.05): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const span = hi - lo || 1;
  return [lo - pad * span, hi + pad * span];
}

export function ticks(lo: number, hi: number, n = 6): number[] {
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = (span / n) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += s) out.push(v);
  return out;
}

export class Svg {
  parts: string[] = [];

  constructor(title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">${title}</text>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#333", widthPx = 1) {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${widthPx}"/>`,
    );
  }

  polyline(pts: Array<[number, number]>, stroke: string, widthPx = 1.4) {
    const coords = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${coords}" fill="none" stroke="${stroke}" stroke-width="${widthPx}"/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string, opacity = 1.0) {
    this.parts.push(
      `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(r)}" fill="${fill}" fill-opacity="${opacity}"/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string) {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, s: string, anchor = "middle", size = 12) {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-size="${size}">${s}</text>`,
    );
  }

  axes(xs: Scale, ys: Scale, xlabel: string, ylabel: string) {
    const { left, top } = MARGIN;
    const right = WIDTH - MARGIN.right;
    const bottom = HEIGHT - MARGIN.bottom;
    this.line(left, bottom, right, bottom);
    this.line(left, top, left, bottom);
    for (const t of ticks(xs.domain[0], xs.domain[1])) {
      const x = xs(t);
      this.line(x, bottom, x, bottom + 5);
      this.text(x, bottom + 20, fmt(t));
    }
    for (const t of ticks(ys.domain[0], ys.domain[1])) {
      const y = ys(t);
      this.line(left - 5, y, left, y);
      this.text(left - 9, y + 4, fmt(t), "end");
    }
    this.text((left + right) / 2, HEIGHT - 12, xlabel);
    this.parts.push(
      `<text x="16" y="${(top + bottom) / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${(top + bottom) / 2})">${ylabel}</text>`,
    );
  }

  finish(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

/** Perceptually ordered dark-to-bright colormap (fixed 9-stop table with
 * linear interpolation; stated limits are printed on the color bar). */
const STOPS: Array<[number, number, number]> = [
  [13, 8, 135], [75, 3, 161], [125, 3, 168], [168, 34, 150],
  [203, 70, 121], [229, 107, 93], [248, 148, 65], [253, 195, 40],
  [240, 249, 33],
];

export function heatColor(t: number): string {
  const x = Math.min(1, Math.max(0, t)) * (STOPS.length - 1);
  const i = Math.min(STOPS.length - 2, Math.floor(x));
  const f = x - i;
  const c = STOPS[i].map((v, j) => Math.round(v + f * (STOPS[i + 1][j] - v)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}
