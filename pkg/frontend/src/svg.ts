import { Scene, Item } from "./scene.js";

function fmt(v: number): string {
  return Number.isInteger(v) ? v.toString() : v.toFixed(2);
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function itemToSvg(item: Item): string {
  switch (item.kind) {
    case "rect":
      return `<rect x="${fmt(item.x)}" y="${fmt(item.y)}" width="${fmt(item.w)}" ` +
        `height="${fmt(item.h)}" fill="${item.fill}"/>`;
    case "line": {
      const pts = item.points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
      const dash = item.dash ? ` stroke-dasharray="${item.dash.join(",")}"` : "";
      return `<polyline points="${pts}" fill="none" stroke="${item.color}" ` +
        `stroke-width="${item.width}"${dash}/>`;
    }
    case "marker": {
      const { x, y, size: s, color } = item;
      if (item.shape === "circle") {
        return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(s)}" fill="${color}"/>`;
      }
      if (item.shape === "square") {
        return `<rect x="${fmt(x - s)}" y="${fmt(y - s)}" width="${fmt(2 * s)}" ` +
          `height="${fmt(2 * s)}" fill="${color}"/>`;
      }
      if (item.shape === "diamond") {
        const pts = [[x, y - s], [x + s, y], [x, y + s], [x - s, y]]
          .map(([a, b]) => `${fmt(a)},${fmt(b)}`).join(" ");
        return `<polygon points="${pts}" fill="${color}" class="marker-diamond"/>`;
      }
      // four-point star
      const pts = [[x, y - s], [x + 0.35 * s, y - 0.35 * s], [x + s, y],
                   [x + 0.35 * s, y + 0.35 * s], [x, y + s],
                   [x - 0.35 * s, y + 0.35 * s], [x - s, y],
                   [x - 0.35 * s, y - 0.35 * s]]
        .map(([a, b]) => `${fmt(a)},${fmt(b)}`).join(" ");
      return `<polygon points="${pts}" fill="${color}" class="marker-star"/>`;
    }
    case "text": {
      const anchor = { start: "start", middle: "middle", end: "end" }[item.anchor];
      return `<text x="${fmt(item.x)}" y="${fmt(item.y)}" font-size="${item.size}" ` +
        `font-family="monospace" text-anchor="${anchor}" fill="${item.color}">` +
        `${esc(item.text)}</text>`;
    }
  }
}

/** Deterministic SVG serialization: no timestamps, ids, or randomness. */
export function sceneToSvg(scene: Scene): string {
  const body = scene.items.map(itemToSvg).join("\n  ");
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" ` +
    `height="${scene.height}" viewBox="0 0 ${scene.width} ${scene.height}">\n` +
    `  <rect width="100%" height="100%" fill="${scene.background}"/>\n` +
    `  ${body}\n</svg>\n`;
}
