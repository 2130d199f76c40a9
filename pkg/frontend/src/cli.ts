/** Figure rendering front end: `render --spec panel.json [--out dir]`.
 * Each spec produces <out>/<out_base>.svg and <out>/<out_base>.png; both are
 * byte-identical across repeated runs. Exit codes: 0 ok, 2 bad spec/input. */

import fs from "node:fs";
import path from "node:path";
import process from "node:process";
import { buildPanel } from "./panels.js";
import { sceneToSvg } from "./svg.js";
import { renderScene } from "./raster.js";
import { rasterToPng } from "./png.js";

export function renderSpecFile(specPath: string, outDir: string): string[] {
  const raw = JSON.parse(fs.readFileSync(specPath, "utf-8"));
  const specs = Array.isArray(raw) ? raw : [raw];
  const written: string[] = [];
  fs.mkdirSync(outDir, { recursive: true });
  for (const one of specs) {
    const { scene, spec } = buildPanel(one, path.dirname(specPath));
    const svgPath = path.join(outDir, `${spec.out_base}.svg`);
    const pngPath = path.join(outDir, `${spec.out_base}.png`);
    fs.writeFileSync(svgPath, sceneToSvg(scene));
    fs.writeFileSync(pngPath, rasterToPng(renderScene(scene)));
    written.push(svgPath, pngPath);
  }
  return written;
}

function main(argv: string[]): number {
  const args = argv.slice(2);
  if (args[0] !== "render") {
    console.error("usage: cascade-figures render --spec PATH [--out DIR]");
    return 2;
  }
  let spec = "";
  let out = "figures-out";
  for (let i = 1; i < args.length; i++) {
    if (args[i] === "--spec") spec = args[++i];
    else if (args[i] === "--out") out = args[++i];
    else {
      console.error(`unknown argument ${args[i]}`);
      return 2;
    }
  }
  if (!spec) {
    console.error("missing --spec");
    return 2;
  }
  try {
    const written = renderSpecFile(spec, out);
    for (const w of written) console.log(`wrote ${w}`);
    return 0;
  } catch (err) {
    console.error(`render failed: ${(err as Error).message}`);
    return 2;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv));
}
