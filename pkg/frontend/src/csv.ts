import fs from "node:fs";
import Papa from "papaparse";

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export class MissingColumnError extends Error {
  constructor(column: string, path: string) {
    super(`column "${column}" not found in ${path}`);
  }
}

export function readCsv(path: string): Table {
  const text = fs.readFileSync(path, "utf-8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`failed to parse ${path}: ${first.message} (row ${first.row})`);
  }
  const columns = parsed.meta.fields ?? [];
  return { columns, rows: parsed.data };
}

/** Numeric column; blank cells (failed points, undefined metrics) become NaN. */
export function numericColumn(table: Table, name: string, path = "<csv>"): number[] {
  if (!table.columns.includes(name)) {
    throw new MissingColumnError(name, path);
  }
  return table.rows.map((r) => {
    const raw = (r[name] ?? "").trim();
    return raw === "" ? NaN : Number(raw);
  });
}
