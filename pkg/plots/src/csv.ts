/**
 * Minimal CSV handling for the conslab artifact schemas: plain comma
 * separation, first row is the header, no quoting (the producer never quotes).
 */

export interface Table {
  header: string[];
  rows: string[][];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: no header row");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const rows = lines.slice(1).map((l) => l.split(",").map((c) => c.trim()));
  for (const row of rows) {
    if (row.length !== header.length) {
      throw new SchemaError(
        `ragged CSV row: expected ${header.length} fields, got ${row.length}`,
      );
    }
  }
  return { header, rows };
}

export function requireColumns(table: Table, needed: string[]): void {
  const missing = needed.filter((c) => !table.header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `missing column(s) ${missing.join(", ")}; expected schema with columns: ` +
        needed.join(", "),
    );
  }
  if (table.rows.length === 0) {
    throw new SchemaError("empty CSV: header only, no data rows");
  }
}

export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column ${name}`);
  }
  return table.rows.map((r) => {
    const v = Number(r[idx]);
    if (!Number.isFinite(v)) {
      throw new SchemaError(`non-numeric value '${r[idx]}' in column ${name}`);
    }
    return v;
  });
}

export function textColumn(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column ${name}`);
  }
  return table.rows.map((r) => r[idx]);
}
