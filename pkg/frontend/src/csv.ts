/** Strict reader for the simulator's CSV artifacts (RFC-4180-style,
 * header row, '.' decimals, no quoting needed for numeric bodies). */

import { readFileSync } from "fs";

export interface Table {
  header: string[];
  rows: string[][];
}

export class CsvError extends Error {}

export function readCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch {
    throw new CsvError(`cannot read CSV file: ${path}`);
  }
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) throw new CsvError(`empty CSV: ${path}`);
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  if (rows.length === 0) throw new CsvError(`CSV has no data rows: ${path}`);
  for (const [i, row] of rows.entries()) {
    if (row.length !== header.length) {
      throw new CsvError(`row ${i + 1} has ${row.length} cells, expected ${header.length}`);
    }
  }
  return { header, rows };
}

/** Numeric column accessor; raises a structured error naming the column. */
export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new CsvError(`missing column: ${name}`);
  return table.rows.map((r, i) => {
    const v = Number(r[idx]);
    if (!Number.isFinite(v)) {
      throw new CsvError(`non-numeric value in column ${name}, row ${i + 1}: ${r[idx]}`);
    }
    return v;
  });
}

export function columnsMatching(table: Table, prefix: string): string[] {
  return table.header.filter((h) => h.startsWith(prefix));
}
