/** CLI: render one panel from simulator artifacts into an SVG file.
 *
 *   node dist/index.js <panel> --input <dir> --out <file.svg>
 *                      [--scatter <dir>] [--expect-sha <hex>]
 */

import { writeFileSync } from "fs";
import { render, FigureSpec, PanelType } from "./panels.js";

const PANELS = [
  "bands", "bound_curve", "pseudospec_heatmap", "scatter_overlay",
  "ids_curve", "transport_series", "wannier_trend",
];

function parseArgs(argv: string[]): FigureSpec & { out: string } {
  const [panel, ...rest] = argv;
  if (!panel || !PANELS.includes(panel)) {
    throw new Error(`usage: render <${PANELS.join("|")}> --input DIR --out FILE`);
  }
  const opts: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    const val = rest[i + 1];
    if (!key?.startsWith("--") || val === undefined) {
      throw new Error(`malformed option near '${key}'`);
    }
    opts[key.slice(2)] = val;
  }
  if (!opts.input || !opts.out) throw new Error("--input and --out are required");
  return {
    panel: panel as PanelType,
    inputDir: opts.input,
    overlayDir: opts.scatter,
    expectedSha: opts["expect-sha"],
    out: opts.out,
  };
}

export function main(argv: string[]): number {
  let spec: ReturnType<typeof parseArgs>;
  try {
    spec = parseArgs(argv);
  } catch (e) {
    console.error((e as Error).message);
    return 2;
  }
  try {
    const svg = render(spec);
    writeFileSync(spec.out, svg);
  } catch (e) {
    console.error(`render failed: ${(e as Error).message}`);
    return 1;
  }
  console.log(`wrote ${spec.out}`);
  return 0;
}

process.exit(main(process.argv.slice(2)));
