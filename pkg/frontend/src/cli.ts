/** figure CLI:
 *   node dist/cli.js all --results <dir> --out <dir>
 *   node dist/cli.js constellation|convergence|timing --in <csv> --out <svg>
 *   node dist/cli.js sweep --in <csv> --metric mmse|throughput --out <svg>
 */

import { writeFileSync } from "node:fs";

import { buildConstellation, buildConvergence, buildSweep, buildTiming } from "./figures.js";
import { renderAll } from "./driver.js";

function arg(flag: string, fallback?: string): string {
  const i = process.argv.indexOf(flag);
  if (i >= 0 && i + 1 < process.argv.length) return process.argv[i + 1];
  if (fallback !== undefined) return fallback;
  throw new Error(`missing required flag ${flag}`);
}

function main(): number {
  const kind = process.argv[2];
  try {
    if (kind === "all") {
      const res = renderAll(arg("--results"), arg("--out", "figures"));
      console.log(`wrote ${res.written.length} figures + manifest.json`);
      return 0;
    }
    const input = arg("--in");
    const output = arg("--out");
    const fig =
      kind === "constellation"
        ? buildConstellation(input)
        : kind === "convergence"
          ? buildConvergence(input)
          : kind === "timing"
            ? buildTiming(input)
            : kind === "sweep"
              ? buildSweep(input, arg("--metric", "mmse") as "mmse" | "throughput")
              : null;
    if (!fig) {
      console.error(`unknown figure kind: ${kind}`);
      return 2;
    }
    writeFileSync(output, fig.svg);
    console.log(`wrote ${output}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

process.exit(main());
