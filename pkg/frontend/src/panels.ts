/** Panel renderers: every plotted value comes verbatim from an input
 * file; the only computation here is axis transforms. */

import { join } from "path";
import { column, columnsMatching, readCsv, CsvError, Table } from "./csv.js";
import { validateInput } from "./manifest.js";
import {
  HEIGHT,
  MARGIN,
  Svg,
  WIDTH,
  extent,
  heatColor,
  linearScale,
  fmt,
} from "./svg.js";

export type PanelType =
  | "bands"
  | "bound_curve"
  | "pseudospec_heatmap"
  | "scatter_overlay"
  | "ids_curve"
  | "transport_series"
  | "wannier_trend";

export interface FigureSpec {
  panel: PanelType;
  inputDir: string;
  overlayDir?: string; // scatter realizations for scatter_overlay
  expectedSha?: string;
  logColor?: boolean;
}

const SOURCES: Record<PanelType, [string, string]> = {
  bands: ["bands", "bands.csv"],
  bound_curve: ["stability-bound", "bound.csv"],
  pseudospec_heatmap: ["pseudospec", "pseudospec.csv"],
  scatter_overlay: ["pseudospec", "pseudospec.csv"],
  ids_curve: ["disorder-ids", "ids.csv"],
  transport_series: ["transport", "transport.csv"],
  wannier_trend: ["wannier-moment", "wannier.csv"],
};

function plotArea() {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

function loadTable(spec: FigureSpec): Table {
  const [sub, name] = SOURCES[spec.panel];
  validateInput(spec.inputDir, sub, name, spec.expectedSha);
  return readCsv(join(spec.inputDir, name));
}

function renderBands(spec: FigureSpec): string {
  const t = loadTable(spec);
  const coord = column(t, "path_coord");
  const bandCols = columnsMatching(t, "E_");
  if (bandCols.length === 0) throw new CsvError("missing column: E_1");
  const svg = new Svg("Band structure along K - G - M - K");
  const a = plotArea();
  const all: number[] = [];
  for (const c of bandCols) all.push(...column(t, c));
  const xs = linearScale(coord[0], coord[coord.length - 1], a.x0, a.x1);
  const [lo, hi] = extent(all);
  const ys = linearScale(Math.max(lo, -3), Math.min(hi, 3), a.y0, a.y1);
  svg.axes(xs, ys, "path coordinate", "energy");
  const n = bandCols.length;
  for (const [i, cname] of bandCols.entries()) {
    const e = column(t, cname);
    const middle = i === n / 2 - 1 || i === n / 2;
    const pts: Array<[number, number]> = [];
    for (let j = 0; j < coord.length; j++) {
      if (e[j] >= ys.domain[0] && e[j] <= ys.domain[1]) {
        pts.push([xs(coord[j]), ys(e[j])]);
      }
    }
    if (pts.length > 1) {
      svg.polyline(pts, middle ? "#c0392b" : "#2c3e50", middle ? 2.2 : 1.1);
    }
  }
  return svg.finish();
}

function renderBoundCurve(spec: FigureSpec): string {
  const t = loadTable(spec);
  const alpha = column(t, "alpha");
  const bound = column(t, "log10_bound");
  const svg = new Svg("Admissible perturbation size (log10) vs twist parameter");
  const a = plotArea();
  const xs = linearScale(...extent(alpha), a.x0, a.x1);
  const finite = bound.filter((b) => Number.isFinite(b));
  const ys = linearScale(...extent(finite), a.y0, a.y1);
  svg.axes(xs, ys, "alpha", "log10 bound");
  const pts: Array<[number, number]> = [];
  for (let i = 0; i < alpha.length; i++) {
    if (Number.isFinite(bound[i])) pts.push([xs(alpha[i]), ys(bound[i])]);
  }
  svg.polyline(pts, "#8e44ad", 1.8);
  for (const [x, y] of pts) svg.circle(x, y, 2.2, "#8e44ad");
  return svg.finish();
}

function heatmapBase(spec: FigureSpec, svg: Svg) {
  const t = loadTable(spec);
  const re = column(t, "re_z");
  const im = column(t, "im_z");
  const val = column(t, "sigma_min");
  const res = [...new Set(re)].sort((p, q) => p - q);
  const ims = [...new Set(im)].sort((p, q) => p - q);
  const a = plotArea();
  const xs = linearScale(res[0], res[res.length - 1], a.x0, a.x1);
  const ys = linearScale(ims[0], ims[ims.length - 1], a.y0, a.y1);
  const logv = val.map((v) => Math.log10(Math.max(v, 1e-16)));
  const [vlo, vhi] = [Math.min(...logv), Math.max(...logv)];
  const cw = (a.x1 - a.x0) / res.length;
  const ch = Math.abs(a.y1 - a.y0) / ims.length;
  for (let i = 0; i < re.length; i++) {
    const tNorm = (logv[i] - vlo) / (vhi - vlo || 1);
    svg.rect(xs(re[i]) - cw / 2, ys(im[i]) - ch / 2, cw + 0.5, ch + 0.5,
      heatColor(tNorm));
  }
  svg.axes(xs, ys, "Re z", "Im z");
  svg.text(WIDTH - 190, 36,
    `log10 sigma_min in [${fmt(vlo)}, ${fmt(vhi)}]`, "start", 11);
  return { xs, ys };
}

function renderPseudospec(spec: FigureSpec): string {
  const svg = new Svg("Reciprocal resolvent norm of the compact operator");
  heatmapBase(spec, svg);
  return svg.finish();
}

function renderScatterOverlay(spec: FigureSpec): string {
  if (!spec.overlayDir) throw new CsvError("scatter_overlay needs --scatter dir");
  const svg = new Svg("Perturbed eigenvalue clouds over the resolvent norm");
  const { xs, ys } = heatmapBase(spec, svg);
  validateInput(spec.overlayDir, "perturb-scatter", "scatter.csv");
  const s = readCsv(join(spec.overlayDir, "scatter.csv"));
  const reA = column(s, "re_alpha");
  const imA = column(s, "im_alpha");
  let drawn = 0;
  for (let i = 0; i < reA.length; i++) {
    // the cloud is plotted in eigenvalue coordinates 1/alpha
    const d = reA[i] * reA[i] + imA[i] * imA[i];
    const zr = reA[i] / d;
    const zi = -imA[i] / d;
    if (zr >= xs.domain[0] && zr <= xs.domain[1] && zi >= ys.domain[0] && zi <= ys.domain[1]) {
      svg.circle(xs(zr), ys(zi), 1.6, "black", 0.85);
      drawn++;
    }
  }
  svg.text(WIDTH - 190, 52, `${drawn} perturbed eigenvalues`, "start", 11);
  return svg.finish();
}

function renderIdsCurve(spec: FigureSpec): string {
  const t = loadTable(spec);
  const lo = column(t, "interval_lo");
  const hi = column(t, "interval_hi");
  const mean = column(t, "ids_mean");
  const err = column(t, "ids_stderr");
  const widths = lo.map((l, i) => hi[i] - l);
  const svg = new Svg("Integrated density of states per interval");
  const a = plotArea();
  const xs = linearScale(...extent(widths), a.x0, a.x1);
  const ys = linearScale(...extent([...mean, 0]), a.y0, a.y1);
  svg.axes(xs, ys, "interval width", "states per area");
  for (let i = 0; i < widths.length; i++) {
    const x = xs(widths[i]);
    svg.line(x, ys(mean[i] - err[i]), x, ys(mean[i] + err[i]), "#16a085", 1.2);
    svg.circle(x, ys(mean[i]), 3.2, "#16a085");
  }
  return svg.finish();
}

function renderTransport(spec: FigureSpec): string {
  const t = loadTable(spec);
  const times = column(t, "t");
  const m = column(t, "M");
  const svg = new Svg("Spread of the energy-filtered one-cell state");
  const a = plotArea();
  const xs = linearScale(...extent(times), a.x0, a.x1);
  const ys = linearScale(...extent([...m, 0]), a.y0, a.y1);
  svg.axes(xs, ys, "time", "second moment");
  svg.polyline(times.map((x, i) => [xs(x), ys(m[i])] as [number, number]),
    "#2980b9", 1.8);
  for (let i = 0; i < times.length; i++) {
    svg.circle(xs(times[i]), ys(m[i]), 2.6, "#2980b9");
  }
  return svg.finish();
}

function renderWannier(spec: FigureSpec): string {
  const t = loadTable(spec);
  const L = column(t, "L");
  const mom = column(t, "moment");
  const svg = new Svg("Flat-band localization moment vs torus size");
  const a = plotArea();
  const xs = linearScale(...extent(L), a.x0, a.x1);
  const ys = linearScale(...extent([...mom, 0]), a.y0, a.y1);
  svg.axes(xs, ys, "torus size L", "moment");
  svg.polyline(L.map((x, i) => [xs(x), ys(mom[i])] as [number, number]),
    "#d35400", 1.8);
  for (let i = 0; i < L.length; i++) {
    svg.circle(xs(L[i]), ys(mom[i]), 3.0, "#d35400");
  }
  return svg.finish();
}

export function render(spec: FigureSpec): string {
  switch (spec.panel) {
    case "bands":
      return renderBands(spec);
    case "bound_curve":
      return renderBoundCurve(spec);
    case "pseudospec_heatmap":
      return renderPseudospec(spec);
    case "scatter_overlay":
      return renderScatterOverlay(spec);
    case "ids_curve":
      return renderIdsCurve(spec);
    case "transport_series":
      return renderTransport(spec);
    case "wannier_trend":
      return renderWannier(spec);
    default:
      throw new CsvError(`unknown panel type: ${(spec as FigureSpec).panel}`);
  }
}
