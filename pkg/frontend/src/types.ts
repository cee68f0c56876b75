/** Shared row and figure types for the ftnslp CSV outputs. */

/** Pinned headers of the simulator CSVs; any mismatch aborts rendering. */
export const SWEEP_HEADER = [
  "axis",
  "trial",
  "mmse",
  "throughput",
  "energy",
  "min_margin",
  "iterations",
  "wall_time_s",
  "status",
] as const;

export const TRACE_HEADER = ["iter", "f", "mmse", "wall_time_s"] as const;

export const CONSTELLATION_HEADER = ["user", "slot", "re", "im", "margin"] as const;

/** One parsed CSV: raw cells by column plus the original header order. */
export interface Table {
  header: string[];
  /** column name -> raw string cells, row order preserved */
  columns: Map<string, string[]>;
  rows: number;
}

/** A plottable series: parsed values plus the raw cells they came from. */
export interface Series {
  label: string;
  /** raw CSV cells, verbatim; the hash manifest is computed over these */
  raw: string[];
  values: number[];
  source: string;
  column: string;
}

export type FigureKind = "constellation" | "convergence" | "sweep" | "timing";

export interface FigureRequest {
  kind: FigureKind;
  inputPaths: string[];
  outputPath: string;
  /** sweep options */
  metric?: "mmse" | "throughput";
  xLabel?: string;
  yLabel?: string;
  logY?: boolean;
  band?: boolean;
  title?: string;
}

export interface SeriesHash {
  source: string;
  column: string;
  selector: string;
  sha256: string;
}

export type FigureManifest = Record<string, Record<string, SeriesHash>>;
