/** Software rasterizer for the PNG output: integer scanline fills and
 * Bresenham strokes, no anti-aliasing, so output bytes depend only on the
 * scene. Text uses the built-in 5x7 bitmap font scaled to the nearest
 * integer factor. */

import { Scene, Item } from "./scene.js";
import { glyph, GLYPH_W, GLYPH_H } from "./font.js";

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8ClampedArray;

  constructor(width: number, height: number, background: string) {
    this.width = width;
    this.height = height;
    this.data = new Uint8ClampedArray(width * height * 4);
    const [r, g, b] = parseColor(background);
    for (let i = 0; i < width * height; i++) {
      this.data[4 * i] = r;
      this.data[4 * i + 1] = g;
      this.data[4 * i + 2] = b;
      this.data[4 * i + 3] = 255;
    }
  }

  set(x: number, y: number, rgb: [number, number, number]) {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = 4 * (y * this.width + x);
    this.data[i] = rgb[0];
    this.data[i + 1] = rgb[1];
    this.data[i + 2] = rgb[2];
    this.data[i + 3] = 255;
  }

  fillRect(x0: number, y0: number, w: number, h: number, rgb: [number, number, number]) {
    const xa = Math.round(x0), ya = Math.round(y0);
    const xb = Math.round(x0 + w), yb = Math.round(y0 + h);
    for (let y = Math.min(ya, yb); y < Math.max(ya, yb); y++) {
      for (let x = Math.min(xa, xb); x < Math.max(xa, xb); x++) {
        this.set(x, y, rgb);
      }
    }
  }

  line(x0: number, y0: number, x1: number, y1: number,
       rgb: [number, number, number], width: number, dash?: number[]) {
    let xa = Math.round(x0), ya = Math.round(y0);
    const xb = Math.round(x1), yb = Math.round(y1);
    const dx = Math.abs(xb - xa), dy = -Math.abs(yb - ya);
    const sx = xa < xb ? 1 : -1, sy = ya < yb ? 1 : -1;
    let err = dx + dy;
    let walked = 0;
    const period = dash ? dash.reduce((a, b) => a + b, 0) : 0;
    for (;;) {
      const on = !dash || (walked % period) < dash[0];
      if (on) {
        this.set(xa, ya, rgb);
        if (width > 1) {
          this.set(xa + 1, ya, rgb);
          this.set(xa, ya + 1, rgb);
        }
      }
      if (xa === xb && ya === yb) break;
      const e2 = 2 * err;
      if (e2 >= dy) { err += dy; xa += sx; walked++; }
      if (e2 <= dx) { err += dx; ya += sy; walked++; }
    }
  }

  polyline(points: [number, number][], rgb: [number, number, number],
           width: number, dash?: number[]) {
    for (let i = 1; i < points.length; i++) {
      this.line(points[i - 1][0], points[i - 1][1], points[i][0], points[i][1],
                rgb, width, dash);
    }
  }

  marker(shape: string, cx: number, cy: number, s: number,
         rgb: [number, number, number]) {
    const x0 = Math.round(cx), y0 = Math.round(cy), r = Math.round(s);
    for (let dy = -r; dy <= r; dy++) {
      for (let dx = -r; dx <= r; dx++) {
        const keep = shape === "circle" ? dx * dx + dy * dy <= r * r
          : shape === "square" ? true
          : shape === "diamond" ? Math.abs(dx) + Math.abs(dy) <= r
          : Math.abs(dx) + Math.abs(dy) <= r || Math.abs(dx * dy) <= r / 3;
        if (keep) this.set(x0 + dx, y0 + dy, rgb);
      }
    }
  }

  text(str: string, x: number, y: number, size: number,
       rgb: [number, number, number], anchor: "start" | "middle" | "end") {
    const scale = Math.max(1, Math.round(size / GLYPH_H));
    const advance = (GLYPH_W + 1) * scale;
    const total = str.length * advance;
    let px = Math.round(anchor === "middle" ? x - total / 2
      : anchor === "end" ? x - total : x);
    const py = Math.round(y - GLYPH_H * scale + scale);
    for (const ch of str) {
      const rows = glyph(ch);
      for (let ry = 0; ry < GLYPH_H; ry++) {
        for (let rx = 0; rx < GLYPH_W; rx++) {
          if ((rows[ry] >> (GLYPH_W - 1 - rx)) & 1) {
            this.fillRect(px + rx * scale, py + ry * scale, scale, scale, rgb);
          }
        }
      }
      px += advance;
    }
  }
}

export function parseColor(hex: string): [number, number, number] {
  const m = /^#([0-9a-f]{6})$/i.exec(hex);
  if (!m) throw new Error(`unsupported color ${hex}`);
  const v = parseInt(m[1], 16);
  return [(v >> 16) & 255, (v >> 8) & 255, v & 255];
}

export function renderScene(scene: Scene): Raster {
  const r = new Raster(scene.width, scene.height, scene.background);
  for (const item of scene.items) {
    drawItem(r, item);
  }
  return r;
}

function drawItem(r: Raster, item: Item) {
  switch (item.kind) {
    case "rect":
      r.fillRect(item.x, item.y, item.w, item.h, parseColor(item.fill));
      break;
    case "line":
      r.polyline(item.points, parseColor(item.color), item.width, item.dash);
      break;
    case "marker":
      r.marker(item.shape, item.x, item.y, item.size, parseColor(item.color));
      break;
    case "text":
      r.text(item.text, item.x, item.y, item.size, parseColor(item.color),
             item.anchor);
      break;
  }
}
