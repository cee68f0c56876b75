/** Regenerate the full figure set from a results directory.
 *
 * Expected inputs (produced by the simulator CLI):
 *   constellation.csv, trace_minorization.csv, trace_sca.csv,
 *   sweep_E.csv, sweep_Gamma.csv, sweep_L.csv, sweep_K.csv
 *
 * Outputs nine SVGs plus manifest.json mapping every drawn data series to
 * the sha256 of the raw CSV cells it consumed.
 */

import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { buildConstellation, buildConvergence, buildSweep, buildTiming, type BuiltFigure } from "./figures.js";
import type { FigureManifest } from "./types.js";

export interface DriverResult {
  written: string[];
  manifest: FigureManifest;
}

const FIGURES: Array<[string, string, (path: string) => BuiltFigure]> = [
  ["constellation.svg", "constellation.csv", buildConstellation],
  ["convergence_minorization.svg", "trace_minorization.csv", (p) => buildConvergence(p)],
  ["convergence_sca.svg", "trace_sca.csv", (p) => buildConvergence(p)],
  ["mmse_vs_E.svg", "sweep_E.csv", (p) => buildSweep(p, "mmse")],
  ["mmse_vs_Gamma.svg", "sweep_Gamma.csv", (p) => buildSweep(p, "mmse")],
  ["throughput_vs_Gamma.svg", "sweep_Gamma.csv", (p) => buildSweep(p, "throughput")],
  ["mmse_vs_L.svg", "sweep_L.csv", (p) => buildSweep(p, "mmse")],
  ["mmse_vs_K.svg", "sweep_K.csv", (p) => buildSweep(p, "mmse")],
  ["timing_vs_L.svg", "sweep_L.csv", buildTiming],
];

export function renderAll(resultsDir: string, outDir: string): DriverResult {
  const missing = FIGURES.map(([, input]) => input).filter(
    (input, i, arr) => arr.indexOf(input) === i && !existsSync(join(resultsDir, input)),
  );
  if (missing.length) {
    throw new Error(`missing inputs in ${resultsDir}: ${missing.join(", ")}`);
  }
  mkdirSync(outDir, { recursive: true });
  const manifest: FigureManifest = {};
  const written: string[] = [];
  for (const [output, input, build] of FIGURES) {
    const fig = build(join(resultsDir, input));
    const outPath = join(outDir, output);
    writeFileSync(outPath, fig.svg);
    manifest[output] = fig.hashes;
    written.push(outPath);
  }
  writeFileSync(join(outDir, "manifest.json"), JSON.stringify(manifest, null, 2));
  return { written, manifest };
}
