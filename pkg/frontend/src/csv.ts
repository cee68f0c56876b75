/** Strict CSV reading for the simulator outputs.
 *
 * The simulator never emits quoted or comma-containing fields, so a plain
 * split is exact. Headers are pinned: a mismatch aborts with the expected
 * and found header lines.
 */

import { readFileSync } from "node:fs";

import type { Table } from "./types.js";

export class SchemaError extends Error {}

export function parseCsv(text: string, path: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  const header = lines[0].split(",");
  const columns = new Map<string, string[]>(header.map((h) => [h, []]));
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(`${path}: row has ${cells.length} cells, header has ${header.length}`);
    }
    header.forEach((h, i) => columns.get(h)!.push(cells[i]));
  }
  return { header, columns, rows: lines.length - 1 };
}

export function readTable(path: string, expectedHeader: readonly string[]): Table {
  const table = parseCsv(readFileSync(path, "utf8"), path);
  const found = table.header.join(",");
  const expected = expectedHeader.join(",");
  if (found !== expected) {
    throw new SchemaError(`${path}: header mismatch\n  expected: ${expected}\n  found:    ${found}`);
  }
  return table;
}

/** Row indices whose `where` column matches the predicate. */
export function selectRows(table: Table, where: string, pred: (cell: string) => boolean): number[] {
  const col = table.columns.get(where);
  if (!col) throw new SchemaError(`missing column ${where}`);
  const out: number[] = [];
  col.forEach((cell, i) => {
    if (pred(cell)) out.push(i);
  });
  return out;
}

export function pick(table: Table, column: string, rows: number[]): string[] {
  const col = table.columns.get(column);
  if (!col) throw new SchemaError(`missing column ${column}`);
  return rows.map((i) => col[i]);
}
