/** Resolution-independent drawing model shared by the SVG and PNG backends.
 * Everything is computed up front so both outputs are pure functions of the
 * panel spec and input data. */

export type MarkerKind = "circle" | "diamond" | "star" | "square";

export interface LineItem {
  kind: "line";
  points: [number, number][];
  color: string;
  width: number;
  dash?: number[];
}

export interface RectItem {
  kind: "rect";
  x: number; y: number; w: number; h: number;
  fill: string;
}

export interface MarkerItem {
  kind: "marker";
  shape: MarkerKind;
  x: number; y: number;
  size: number;
  color: string;
}

export interface TextItem {
  kind: "text";
  x: number; y: number;
  text: string;
  size: number;
  color: string;
  anchor: "start" | "middle" | "end";
}

export type Item = LineItem | RectItem | MarkerItem | TextItem;

export interface Scene {
  width: number;
  height: number;
  background: string;
  items: Item[];
}

export interface Scale {
  toPx(v: number): number;
  ticks(): number[];
  domain: [number, number];
}

export function linearScale(d0: number, d1: number, p0: number, p1: number): Scale {
  if (d1 === d0) {
    d0 -= 1;
    d1 += 1;
  }
  const f = (p1 - p0) / (d1 - d0);
  return {
    domain: [d0, d1],
    toPx: (v) => p0 + (v - d0) * f,
    ticks: () => niceTicks(d0, d1),
  };
}

export function logScale(d0: number, d1: number, p0: number, p1: number): Scale {
  if (d0 <= 0 || d1 <= 0) throw new Error("log scale needs positive bounds");
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const f = (p1 - p0) / (l1 - l0);
  return {
    domain: [d0, d1],
    toPx: (v) => p0 + (Math.log10(v) - l0) * f,
    ticks: () => {
      const out: number[] = [];
      for (let e = Math.ceil(l0 - 1e-9); e <= Math.floor(l1 + 1e-9); e++) {
        out.push(Math.pow(10, e));
      }
      return out.length >= 2 ? out : [d0, d1];
    },
  };
}

/** Round tick positions covering [lo, hi] with a 1/2/5 step. */
export function niceTicks(lo: number, hi: number, target = 6): number[] {
  const span = hi - lo;
  if (!(span > 0) || !isFinite(span)) return [lo];
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  const first = Math.ceil(lo / step - 1e-9) * step;
  const out: number[] = [];
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 10000 || a < 0.001) return v.toExponential(0).replace("+", "");
  return parseFloat(v.toPrecision(6)).toString();
}
