/**
 * Strict reader for the sweep report CSV.
 *
 * Cell contents are kept as the exact strings from the file so downstream
 * consumers can embed them without any numeric round-tripping. The report
 * schema never quotes fields (no commas inside values), so a plain split
 * is exact.
 */

export interface SweepTable {
  columns: string[];
  /** One record per data line; values are raw cell strings. */
  rows: Record<string, string>[];
}

export function parseCsv(text: string): SweepTable {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV: no header line");
  }
  const columns = lines[0].split(",");
  const rows: Record<string, string>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new Error(`CSV line ${i + 1} has ${cells.length} fields, expected ${columns.length}`);
    }
    const row: Record<string, string> = {};
    columns.forEach((name, j) => {
      row[name] = cells[j];
    });
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new Error("empty CSV: no data rows");
  }
  return { columns, rows };
}

export function requireColumns(table: SweepTable, names: (string | null)[]): void {
  for (const name of names) {
    if (name !== null && !table.columns.includes(name)) {
      throw new Error(`missing column "${name}"`);
    }
  }
}
