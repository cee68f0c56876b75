/** Figure builders: each consumes CSV tables and returns SVG text plus the
 * hash records of every data series it drew. Values are never recomputed;
 * every plotted number is parsed straight from a CSV cell.
 */

import { basename } from "node:path";

import { pick, readTable, selectRows, SchemaError } from "./csv.js";
import { seriesHash } from "./hash.js";
import {
  CONSTELLATION_HEADER,
  SWEEP_HEADER,
  TRACE_HEADER,
  type SeriesHash,
  type Table,
} from "./types.js";
import { DEFAULT_FRAME, linearScale, logScale, SvgDoc, type Scale } from "./svg.js";

export interface BuiltFigure {
  svg: string;
  hashes: Record<string, SeriesHash>;
}

const QPSK = [
  [Math.SQRT1_2, Math.SQRT1_2],
  [-Math.SQRT1_2, Math.SQRT1_2],
  [-Math.SQRT1_2, -Math.SQRT1_2],
  [Math.SQRT1_2, -Math.SQRT1_2],
];

function series(
  table: Table,
  source: string,
  column: string,
  rows: number[],
  selector: string,
): { values: number[]; record: SeriesHash } {
  const raw = pick(table, column, rows);
  return {
    values: raw.map(Number),
    record: { source: basename(source), column, selector, sha256: seriesHash(raw) },
  };
}

function frameScales(xLo: number, xHi: number, yLo: number, yHi: number, logY: boolean) {
  const f = DEFAULT_FRAME;
  const x = linearScale(xLo, xHi, f.margin.left, f.width - f.margin.right);
  const mk = logY ? logScale : linearScale;
  const y = mk(yLo, yHi, f.height - f.margin.bottom, f.margin.top);
  return { f, x, y };
}

function pad(lo: number, hi: number, frac = 0.06): [number, number] {
  const span = hi - lo || Math.abs(hi) || 1;
  return [lo - frac * span, hi + frac * span];
}

export function buildConstellation(path: string): BuiltFigure {
  const table = readTable(path, CONSTELLATION_HEADER);
  if (table.rows === 0) throw new SchemaError(`${path}: no constellation points`);
  const rows = [...Array(table.rows).keys()];
  const re = series(table, path, "re", rows, "all");
  const im = series(table, path, "im", rows, "all");
  const r = Math.max(...re.values.map(Math.abs), ...im.values.map(Math.abs), 1.1) * 1.1;
  const { f, x, y } = frameScales(-r, r, -r, r, false);
  const doc = new SvgDoc(f);
  doc.axes(x, y, "in-phase", "quadrature", "Received symbols (noise-free)");
  // detection thresholds are the axes
  doc.add(`<line x1="${x(-r)}" y1="${y(0)}" x2="${x(r)}" y2="${y(0)}" stroke="#999" stroke-dasharray="4 3"/>`);
  doc.add(`<line x1="${x(0)}" y1="${y(-r)}" x2="${x(0)}" y2="${y(r)}" stroke="#999" stroke-dasharray="4 3"/>`);
  doc.scatter(re.values.map(x), im.values.map(y), "#1f77b4", 3);
  // nominal constellation points, green per the reference rendering
  doc.scatter(QPSK.map(([a]) => x(a)), QPSK.map(([, b]) => y(b)), "#2ca02c", 5);
  return { svg: doc.render(), hashes: { re: re.record, im: im.record } };
}

export function buildConvergence(path: string, metric: "mmse" | "f" = "mmse"): BuiltFigure {
  const table = readTable(path, TRACE_HEADER);
  if (table.rows === 0) throw new SchemaError(`${path}: empty trace`);
  const rows = [...Array(table.rows).keys()];
  const it = series(table, path, "iter", rows, "all");
  const val = series(table, path, metric, rows, "all");
  const positive = val.values.every((v) => v > 0);
  const [yLo, yHi] = pad(Math.min(...val.values), Math.max(...val.values));
  const { f, x, y } = frameScales(
    Math.min(...it.values),
    Math.max(...it.values, 1),
    positive ? Math.min(...val.values) / 1.2 : yLo,
    positive ? Math.max(...val.values) * 1.2 : yHi,
    positive,
  );
  const doc = new SvgDoc(f);
  doc.axes(x, y, "iteration", metric === "mmse" ? "MMSE" : "objective", basename(path, ".csv"));
  doc.polyline(it.values.map(x), val.values.map(y), "#d62728");
  doc.scatter(it.values.map(x), val.values.map(y), "#d62728", 2.5);
  return { svg: doc.render(), hashes: { iter: it.record, [metric]: val.record } };
}

const X_LABELS: Record<string, string> = {
  E: "energy budget (dBm)",
  Gamma: "QoS target (dBm)",
  L: "block length (symbols)",
  K: "users",
  tau: "compression",
};

function axisName(path: string): string {
  const m = basename(path).match(/sweep_(\w+)\.csv/);
  return m ? m[1] : "axis";
}

export function buildSweep(
  path: string,
  metric: "mmse" | "throughput",
  band = true,
): BuiltFigure {
  const table = readTable(path, SWEEP_HEADER);
  const meanRows = selectRows(table, "trial", (c) => c === "mean");
  if (meanRows.length === 0) throw new SchemaError(`${path}: no aggregate rows`);
  const axis = series(table, path, "axis", meanRows, "trial=mean");
  const mean = series(table, path, metric, meanRows, "trial=mean");
  const stdRows = selectRows(table, "trial", (c) => c === "std");
  const std = series(table, path, metric, stdRows, "trial=std");
  const baseRows = selectRows(table, "trial", (c) => c === "baseline");
  const base = baseRows.length ? series(table, path, metric, baseRows, "trial=baseline") : null;

  const lo2 = mean.values.map((m, i) => m - 2 * (std.values[i] ?? 0));
  const hi2 = mean.values.map((m, i) => m + 2 * (std.values[i] ?? 0));
  const finite = (vals: number[]) => vals.filter(Number.isFinite);
  const yAll = finite([...lo2, ...hi2, ...(base && finite(base.values).length ? base.values : [])]);
  const positive = yAll.every((v) => v > 0);
  const [xLo, xHi] = pad(Math.min(...axis.values), Math.max(...axis.values));
  const yLo = Math.min(...yAll);
  const yHi = Math.max(...yAll);
  const { f, x, y } = frameScales(
    xLo,
    xHi,
    positive ? yLo / 1.3 : pad(yLo, yHi)[0],
    positive ? yHi * 1.3 : pad(yLo, yHi)[1],
    positive && metric === "mmse",
  );
  const name = axisName(path);
  const doc = new SvgDoc(f);
  doc.axes(
    x,
    y,
    X_LABELS[name] ?? name,
    metric === "mmse" ? "MMSE" : "throughput (bits / T0)",
    `${metric} vs ${name}`,
  );
  if (band && std.values.length === mean.values.length) {
    doc.band(axis.values.map(x), lo2.map(y), hi2.map(y), "#1f77b4");
  }
  doc.polyline(axis.values.map(x), mean.values.map(y), "#1f77b4", 2.2);
  doc.scatter(axis.values.map(x), mean.values.map(y), "#1f77b4", 3);
  const legend: Array<[string, string]> = [["mean (2 sigma band)", "#1f77b4"]];
  const hashes: Record<string, SeriesHash> = {
    axis: axis.record,
    mean: mean.record,
    std: std.record,
  };
  if (base && finite(base.values).length === base.values.length) {
    doc.polyline(axis.values.map(x), base.values.map(y), "#2ca02c", 1.8, "6 4");
    legend.push(["sensing-only bound", "#2ca02c"]);
    hashes.baseline = base.record;
  }
  doc.legend(legend);
  return { svg: doc.render(), hashes };
}

export function buildTiming(path: string): BuiltFigure {
  const table = readTable(path, SWEEP_HEADER);
  const meanRows = selectRows(table, "trial", (c) => c === "mean");
  if (meanRows.length === 0) throw new SchemaError(`${path}: no aggregate rows`);
  const axis = series(table, path, "axis", meanRows, "trial=mean");
  const wall = series(table, path, "wall_time_s", meanRows, "trial=mean");
  const [xLo, xHi] = pad(Math.min(...axis.values), Math.max(...axis.values), 0.2);
  const { f, x, y } = frameScales(xLo, xHi, 0, Math.max(...wall.values) * 1.2, false);
  const name = axisName(path);
  const doc = new SvgDoc(f);
  doc.axes(x, y, X_LABELS[name] ?? name, "CPU time (seconds)", `solve time vs ${name}`);
  const barW = Math.max(10, (x(axis.values[1] ?? xHi) - x(axis.values[0])) * 0.3);
  doc.bars(axis.values.map(x), wall.values.map(y), y(0), barW, "#ff7f0e");
  return { svg: doc.render(), hashes: { axis: axis.record, wall_time_s: wall.record } };
}
