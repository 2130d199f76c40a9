/** Panel assembly: sweep CSVs in, drawing scenes out.
 *
 * Series colors follow the fixed role conventions (indistinguishability
 * green, purity red, emission blue); experiment overlays are purple
 * diamonds, analytic references gray. No physics is recomputed here beyond
 * the single closed-form lifetime-ratio visibility curve offered as a
 * reference overlay. */

import path from "node:path";
import { readCsv, numericColumn, Table } from "./csv.js";
import { Scene, Item, Scale, linearScale, logScale, formatTick } from "./scene.js";

export const ROLE_COLORS: Record<string, string> = {
  indistinguishability: "#2ca02c",
  purity: "#d62728",
  emission: "#1f77b4",
  visibility: "#17becf",
  g2_zero: "#ff7f0e",
  concurrence: "#8c564b",
  analytic: "#666666",
  experiment: "#9467bd",
};

export interface SeriesSpec {
  column: string;
  role?: string;           // color convention key; defaults to the column name
  label?: string;
  dash?: number[];
}

export interface OverlaySpec {
  type: "experiment_markers" | "points" | "lifetime_ratio_limit";
  points?: [number, number][];
  label?: string;
  provenance?: string;     // required for data overlays: where the numbers came from
  color?: string;
}

export interface PanelSpec {
  kind: "lines" | "heatmap";
  input: string;
  x: string;
  y?: SeriesSpec[];
  value?: string;          // heatmap value column
  y_column?: string;       // heatmap row coordinate column
  x_label?: string;
  y_label?: string;
  title?: string;
  x_scale?: "linear" | "log";
  x_unit_scale?: number;   // multiply x values (e.g. 1e-3 for ueV -> meV)
  y_range?: [number, number];
  width?: number;
  height?: number;
  out_base: string;
}

export function loadPanelSpec(raw: unknown, specDir: string): PanelSpec {
  const spec = raw as PanelSpec & { overlays?: OverlaySpec[] };
  if (!spec.out_base) throw new Error("panel spec needs out_base");
  if (!spec.input) throw new Error("panel spec needs input CSV path");
  if (!path.isAbsolute(spec.input)) spec.input = path.join(specDir, spec.input);
  if (spec.kind === "lines" && (!spec.y || spec.y.length === 0)) {
    throw new Error("lines panel needs at least one y series");
  }
  for (const ov of spec.overlays ?? []) {
    if (ov.type !== "lifetime_ratio_limit" && !ov.provenance) {
      throw new Error(`overlay ${ov.type} needs a provenance label`);
    }
  }
  return spec;
}

const MARGIN = { left: 64, right: 16, top: 28, bottom: 46 };

function frame(scene: Scene, xs: Scale, ys: Scale, spec: PanelSpec,
               px0: number, px1: number, py0: number, py1: number) {
  scene.items.push({ kind: "rect", x: px0, y: py1, w: px1 - px0, h: py0 - py1,
                     fill: "#ffffff" });
  for (const t of xs.ticks()) {
    const x = xs.toPx(t);
    scene.items.push({ kind: "line", points: [[x, py0], [x, py1]],
                       color: "#dddddd", width: 1 });
    scene.items.push({ kind: "line", points: [[x, py0], [x, py0 + 4]],
                       color: "#000000", width: 1 });
    scene.items.push({ kind: "text", x, y: py0 + 16, text: formatTick(t),
                       size: 10, color: "#000000", anchor: "middle" });
  }
  for (const t of ys.ticks()) {
    const y = ys.toPx(t);
    scene.items.push({ kind: "line", points: [[px0, y], [px1, y]],
                       color: "#dddddd", width: 1 });
    scene.items.push({ kind: "text", x: px0 - 6, y: y + 3, text: formatTick(t),
                       size: 10, color: "#000000", anchor: "end" });
  }
  const box: [number, number][] = [[px0, py0], [px1, py0], [px1, py1], [px0, py1], [px0, py0]];
  scene.items.push({ kind: "line", points: box, color: "#000000", width: 1 });
  if (spec.x_label) {
    scene.items.push({ kind: "text", x: (px0 + px1) / 2, y: py0 + 34,
                       text: spec.x_label, size: 11, color: "#000000", anchor: "middle" });
  }
  if (spec.y_label) {
    scene.items.push({ kind: "text", x: px0 - 50, y: py1 - 8, text: spec.y_label,
                       size: 11, color: "#000000", anchor: "start" });
  }
  if (spec.title) {
    scene.items.push({ kind: "text", x: (px0 + px1) / 2, y: py1 - 10,
                       text: spec.title, size: 12, color: "#000000", anchor: "middle" });
  }
}

export function buildLinesPanel(spec: PanelSpec, overlays: OverlaySpec[]): Scene {
  const width = spec.width ?? 640;
  const height = spec.height ?? 420;
  const table = readCsv(spec.input);
  const xScaleFactor = spec.x_unit_scale ?? 1;
  const xsRaw = numericColumn(table, spec.x, spec.input).map((v) => v * xScaleFactor);
  const seriesData = (spec.y ?? []).map((s) => ({
    spec: s,
    values: numericColumn(table, s.column, spec.input),
  }));

  const px0 = MARGIN.left, px1 = width - MARGIN.right;
  const py0 = height - MARGIN.bottom, py1 = MARGIN.top;

  const finite = (v: number) => Number.isFinite(v);
  let xlo = Math.min(...xsRaw.filter(finite));
  let xhi = Math.max(...xsRaw.filter(finite));
  let ylo = Infinity, yhi = -Infinity;
  for (const s of seriesData) {
    for (const v of s.values) {
      if (finite(v)) { ylo = Math.min(ylo, v); yhi = Math.max(yhi, v); }
    }
  }
  for (const ov of overlays) {
    for (const [x, y] of ov.points ?? []) {
      xlo = Math.min(xlo, x); xhi = Math.max(xhi, x);
      ylo = Math.min(ylo, y); yhi = Math.max(yhi, y);
    }
  }
  if (spec.y_range) [ylo, yhi] = spec.y_range;
  else { const pad = 0.05 * (yhi - ylo || 1); ylo -= pad; yhi += pad; }

  const xs = spec.x_scale === "log" ? logScale(xlo, xhi, px0, px1)
                                    : linearScale(xlo, xhi, px0, px1);
  const ys = linearScale(ylo, yhi, py0, py1);

  const scene: Scene = { width, height, background: "#ffffff", items: [] };
  frame(scene, xs, ys, spec, px0, px1, py0, py1);

  let legendY = py1 + 14;
  for (const s of seriesData) {
    const role = s.spec.role ?? s.spec.column;
    const color = ROLE_COLORS[role] ?? "#333333";
    const pts: [number, number][] = [];
    for (let i = 0; i < xsRaw.length; i++) {
      if (finite(xsRaw[i]) && finite(s.values[i])) {
        pts.push([xs.toPx(xsRaw[i]), ys.toPx(s.values[i])]);
      }
    }
    scene.items.push({ kind: "line", points: pts, color, width: 2,
                       dash: s.spec.dash });
    for (const [x, y] of pts) {
      scene.items.push({ kind: "marker", shape: "circle", x, y, size: 3, color });
    }
    scene.items.push({ kind: "line", points: [[px1 - 120, legendY], [px1 - 100, legendY]],
                       color, width: 2, dash: s.spec.dash });
    scene.items.push({ kind: "text", x: px1 - 94, y: legendY + 3,
                       text: s.spec.label ?? s.spec.column, size: 10,
                       color: "#000000", anchor: "start" });
    legendY += 14;
  }

  for (const ov of overlays) {
    if (ov.type === "lifetime_ratio_limit") {
      // closed-form visibility bound 1/(1 + ratio) as a reference curve
      const pts: [number, number][] = [];
      const [d0, d1] = xs.domain;
      for (let i = 0; i <= 200; i++) {
        const r = spec.x_scale === "log"
          ? Math.pow(10, Math.log10(d0) + (i / 200) * (Math.log10(d1) - Math.log10(d0)))
          : d0 + (i / 200) * (d1 - d0);
        pts.push([xs.toPx(r), ys.toPx(1 / (1 + r))]);
      }
      scene.items.push({ kind: "line", points: pts, color: ov.color ?? ROLE_COLORS.analytic,
                         width: 2, dash: [6, 3] });
    } else {
      const color = ov.color ?? (ov.type === "experiment_markers"
        ? ROLE_COLORS.experiment : ROLE_COLORS.analytic);
      for (const [x, y] of ov.points ?? []) {
        scene.items.push({ kind: "marker", shape: ov.type === "experiment_markers"
                           ? "diamond" : "circle",
                           x: xs.toPx(x), y: ys.toPx(y), size: 6, color });
      }
    }
    if (ov.label) {
      scene.items.push({ kind: "text", x: px1 - 120, y: legendY + 3,
                         text: ov.label, size: 10, color: "#000000", anchor: "start" });
      legendY += 14;
    }
  }
  return scene;
}

/** Small perceptual-ish colormap, dark to bright (deterministic table). */
const HEAT_STOPS: [number, number, number][] = [
  [13, 8, 135], [84, 2, 163], [139, 10, 165], [185, 50, 137],
  [219, 92, 104], [244, 136, 73], [254, 188, 43], [240, 249, 33],
];

export function heatColor(v: number): string {
  const t = Math.min(1, Math.max(0, v));
  const pos = t * (HEAT_STOPS.length - 1);
  const i = Math.min(HEAT_STOPS.length - 2, Math.floor(pos));
  const f = pos - i;
  const c = HEAT_STOPS[i].map((a, k) => Math.round(a + f * (HEAT_STOPS[i + 1][k] - a)));
  return `#${c.map((x) => x.toString(16).padStart(2, "0")).join("")}`;
}

export function buildHeatmapPanel(spec: PanelSpec): Scene {
  const width = spec.width ?? 640;
  const height = spec.height ?? 420;
  const table = readCsv(spec.input);
  const xv = numericColumn(table, spec.x, spec.input);
  const yv = numericColumn(table, spec.y_column ?? "energy_uev", spec.input);
  const vv = numericColumn(table, spec.value ?? "s", spec.input);

  const xsU = [...new Set(xv)].sort((a, b) => a - b);
  const ysU = [...new Set(yv)].sort((a, b) => a - b);
  const px0 = MARGIN.left, px1 = width - MARGIN.right;
  const py0 = height - MARGIN.bottom, py1 = MARGIN.top;
  const xs = linearScale(xsU[0], xsU[xsU.length - 1], px0, px1);
  const ys = linearScale(ysU[0], ysU[ysU.length - 1], py0, py1);

  const vmax = Math.max(...vv.filter(Number.isFinite), 1e-300);
  const xi = new Map(xsU.map((v, i) => [v, i]));
  const yi = new Map(ysU.map((v, i) => [v, i]));
  const cw = (px1 - px0) / xsU.length;
  const ch = (py0 - py1) / ysU.length;

  const scene: Scene = { width, height, background: "#ffffff", items: [] };
  scene.items.push({ kind: "rect", x: px0, y: py1, w: px1 - px0, h: py0 - py1,
                     fill: heatColor(0) });
  for (let k = 0; k < vv.length; k++) {
    if (!Number.isFinite(vv[k])) continue;
    const i = xi.get(xv[k])!;
    const j = yi.get(yv[k])!;
    // log-ish intensity mapping brings out the weak exciton ridge
    const t = Math.log10(1 + 999 * Math.max(0, vv[k]) / vmax) / 3;
    scene.items.push({ kind: "rect", x: px0 + i * cw, y: py0 - (j + 1) * ch,
                       w: cw + 0.5, h: ch + 0.5, fill: heatColor(t) });
  }
  frameAxesOnly(scene, xs, ys, spec, px0, px1, py0, py1);
  return scene;
}

function frameAxesOnly(scene: Scene, xs: Scale, ys: Scale, spec: PanelSpec,
                       px0: number, px1: number, py0: number, py1: number) {
  for (const t of xs.ticks()) {
    const x = xs.toPx(t);
    scene.items.push({ kind: "line", points: [[x, py0], [x, py0 + 4]],
                       color: "#000000", width: 1 });
    scene.items.push({ kind: "text", x, y: py0 + 16, text: formatTick(t),
                       size: 10, color: "#000000", anchor: "middle" });
  }
  for (const t of ys.ticks()) {
    const y = ys.toPx(t);
    scene.items.push({ kind: "line", points: [[px0 - 4, y], [px0, y]],
                       color: "#000000", width: 1 });
    scene.items.push({ kind: "text", x: px0 - 6, y: y + 3, text: formatTick(t),
                       size: 10, color: "#000000", anchor: "end" });
  }
  const box: [number, number][] = [[px0, py0], [px1, py0], [px1, py1], [px0, py1], [px0, py0]];
  scene.items.push({ kind: "line", points: box, color: "#000000", width: 1 });
  if (spec.x_label) {
    scene.items.push({ kind: "text", x: (px0 + px1) / 2, y: py0 + 34,
                       text: spec.x_label, size: 11, color: "#000000", anchor: "middle" });
  }
  if (spec.y_label) {
    scene.items.push({ kind: "text", x: px0 - 50, y: py1 - 8, text: spec.y_label,
                       size: 11, color: "#000000", anchor: "start" });
  }
  if (spec.title) {
    scene.items.push({ kind: "text", x: (px0 + px1) / 2, y: py1 - 10,
                       text: spec.title, size: 12, color: "#000000", anchor: "middle" });
  }
}

export function buildPanel(raw: unknown, specDir: string): { scene: Scene; spec: PanelSpec } {
  const withOverlays = raw as { overlays?: OverlaySpec[] };
  const spec = loadPanelSpec(raw, specDir);
  const scene = spec.kind === "heatmap"
    ? buildHeatmapPanel(spec)
    : buildLinesPanel(spec, withOverlays.overlays ?? []);
  return { scene, spec };
}
