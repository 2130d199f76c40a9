import { describe, it, expect } from "vitest";
import fs from "node:fs";
import path from "node:path";
import os from "node:os";
import { fileURLToPath } from "node:url";
import { readCsv, numericColumn, MissingColumnError } from "../src/csv.js";
import { buildPanel, ROLE_COLORS, heatColor } from "../src/panels.js";
import { sceneToSvg } from "../src/svg.js";
import { renderScene, parseColor } from "../src/raster.js";
import { rasterToPng } from "../src/png.js";
import { renderSpecFile } from "../src/cli.js";
import { niceTicks, linearScale, logScale } from "../src/scene.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const testdata = path.join(here, "..", "testdata");
const specs = path.join(here, "..", "specs");

const sampleSpec = {
  kind: "lines" as const,
  input: path.join(testdata, "e_bind_sweep_sample.csv"),
  x: "value",
  x_unit_scale: 0.001,
  x_label: "binding energy (meV)",
  y: [
    { column: "indistinguishability", role: "indistinguishability" },
    { column: "purity", role: "purity" },
    { column: "emission", role: "emission" },
  ],
  overlays: [
    {
      type: "experiment_markers" as const,
      points: [[2.9, 0.9585], [2.9, 0.977]] as [number, number][],
      provenance: "measured values",
    },
  ],
  out_base: "panel",
};

describe("csv", () => {
  it("parses the sweep contract", () => {
    const t = readCsv(path.join(testdata, "e_bind_sweep_sample.csv"));
    expect(t.columns).toContain("indistinguishability");
    expect(t.rows).toHaveLength(7);
    const e = numericColumn(t, "emission");
    expect(e[0]).toBeCloseTo(0.78404565333, 9);
    // empty concurrence column becomes NaN, not zero
    expect(Number.isNaN(numericColumn(t, "concurrence")[0])).toBe(true);
  });

  it("reports missing columns by name", () => {
    const t = readCsv(path.join(testdata, "e_bind_sweep_sample.csv"));
    expect(() => numericColumn(t, "bogus", "f.csv")).toThrow(MissingColumnError);
    expect(() => numericColumn(t, "bogus", "f.csv")).toThrow(/bogus/);
  });
});

describe("scales", () => {
  it("nice ticks use 1/2/5 steps", () => {
    expect(niceTicks(0, 1)).toEqual([0, 0.2, 0.4, 0.6000000000000001, 0.8, 1].map(
      (v) => expect.closeTo(v, 10) as unknown as number));
  });

  it("linear and log scales map endpoints", () => {
    const lin = linearScale(0, 10, 100, 200);
    expect(lin.toPx(0)).toBe(100);
    expect(lin.toPx(10)).toBe(200);
    const lg = logScale(0.01, 10, 0, 3);
    expect(lg.toPx(0.01)).toBeCloseTo(0);
    expect(lg.toPx(10)).toBeCloseTo(3);
    expect(lg.ticks()).toEqual([0.01, 0.1, 1, 10]);
  });
});

describe("panels", () => {
  it("applies the series color conventions", () => {
    const { scene } = buildPanel(sampleSpec, here);
    const svg = sceneToSvg(scene);
    expect(svg).toContain(ROLE_COLORS.indistinguishability);
    expect(svg).toContain(ROLE_COLORS.purity);
    expect(svg).toContain(ROLE_COLORS.emission);
  });

  it("draws experiment markers as purple diamonds at the requested spot", () => {
    const { scene } = buildPanel(sampleSpec, here);
    const svg = sceneToSvg(scene);
    const diamonds = svg.match(/marker-diamond/g) ?? [];
    expect(diamonds).toHaveLength(2);
    expect(svg).toContain(ROLE_COLORS.experiment);
  });

  it("rejects overlays without provenance", () => {
    const bad = JSON.parse(JSON.stringify(sampleSpec));
    delete bad.overlays[0].provenance;
    expect(() => buildPanel(bad, here)).toThrow(/provenance/);
  });

  it("rejects missing y columns", () => {
    const bad = JSON.parse(JSON.stringify(sampleSpec));
    bad.y[0].column = "not_a_column";
    expect(() => buildPanel(bad, here)).toThrow(/not_a_column/);
  });

  it("builds heatmaps with a monotone colormap", () => {
    expect(heatColor(0)).not.toBe(heatColor(1));
    const spec = JSON.parse(fs.readFileSync(
      path.join(specs, "spectrum_map_panel.json"), "utf-8"));
    const { scene } = buildPanel(spec, specs);
    const rects = scene.items.filter((i) => i.kind === "rect");
    expect(rects.length).toBeGreaterThan(1000);
  });
});

describe("outputs", () => {
  it("png has a valid signature and size", () => {
    const { scene } = buildPanel(sampleSpec, here);
    const png = rasterToPng(renderScene(scene));
    expect([...png.subarray(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
    expect(png.readUInt32BE(16)).toBe(scene.width);
    expect(png.readUInt32BE(20)).toBe(scene.height);
  });

  it("renders byte-identical files across repeated runs", () => {
    const out1 = fs.mkdtempSync(path.join(os.tmpdir(), "fig1-"));
    const out2 = fs.mkdtempSync(path.join(os.tmpdir(), "fig2-"));
    for (const specFile of ["e_bind_panel.json", "spectrum_map_panel.json"]) {
      renderSpecFile(path.join(specs, specFile), out1);
      renderSpecFile(path.join(specs, specFile), out2);
    }
    for (const name of fs.readdirSync(out1)) {
      const a = fs.readFileSync(path.join(out1, name));
      const b = fs.readFileSync(path.join(out2, name));
      expect(a.equals(b), `${name} differs between runs`).toBe(true);
    }
    const names = fs.readdirSync(out1).sort();
    expect(names).toEqual(["e_bind_panel.png", "e_bind_panel.svg",
                           "ratio_limit_panel.png", "ratio_limit_panel.svg",
                           "spectrum_map_panel.png", "spectrum_map_panel.svg"]);
  });

  it("rasterizer fills markers with the exact color", () => {
    const { scene } = buildPanel(sampleSpec, here);
    const raster = renderScene(scene);
    const [r, g, b] = parseColor(ROLE_COLORS.purity);
    let found = false;
    for (let i = 0; i < raster.data.length; i += 4) {
      if (raster.data[i] === r && raster.data[i + 1] === g && raster.data[i + 2] === b) {
        found = true;
        break;
      }
    }
    expect(found).toBe(true);
  });
});
