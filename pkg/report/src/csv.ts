// Minimal CSV handling for the fixed schemas this renderer consumes.
// No quoting or escaping: the producing side never emits either.

export class SchemaError extends Error {}

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) return { columns: [], rows: [] };
  const columns = lines[0]!.split(",");
  const rows = lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, string> = {};
    columns.forEach((c, i) => {
      row[c] = cells[i] ?? "";
    });
    return row;
  });
  return { columns, rows };
}

/** Throws a SchemaError naming every missing column. */
export function requireColumns(table: Table, required: readonly string[], label: string): void {
  const missing = required.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(`${label}: missing columns: ${missing.join(", ")}`);
  }
}

export function num(row: Record<string, string>, col: string): number {
  const v = Number(row[col]);
  if (Number.isNaN(v)) {
    throw new SchemaError(`column ${col}: not a number: ${JSON.stringify(row[col])}`);
  }
  return v;
}
