/**
 * Sweep CSV schema: parsing and validation.
 *
 * The solver writes one row per grid point with this exact header; both the
 * numeric values and the original field strings are kept so a rendering can
 * be compared byte-for-byte against its source.
 */

export const CSV_COLUMNS = [
  "x_value",
  "mean_rate_opt",
  "mean_rate_greedy",
  "mean_eh_slots",
  "mean_tx_slots",
  "mean_iters",
  "trials",
  "seed",
  "sem_rate_opt",
  "sem_rate_greedy",
] as const;

export type Column = (typeof CSV_COLUMNS)[number];

export interface SweepRow {
  /** Parsed numeric value per column. */
  values: Record<Column, number>;
  /** Original field text per column, for exact round-trips. */
  raw: Record<Column, string>;
}

export class SchemaError extends Error {}

export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV: missing header");
  }
  const header = lines[0].split(",");
  for (const column of CSV_COLUMNS) {
    if (!header.includes(column)) {
      throw new SchemaError(`missing column ${column}`);
    }
  }
  if (header.length !== CSV_COLUMNS.length) {
    const extra = header.filter((h) => !(CSV_COLUMNS as readonly string[]).includes(h));
    throw new SchemaError(`unexpected columns ${extra.join(", ")}`);
  }
  for (let i = 0; i < CSV_COLUMNS.length; i++) {
    if (header[i] !== CSV_COLUMNS[i]) {
      throw new SchemaError(`column ${CSV_COLUMNS[i]} out of order (found ${header[i]})`);
    }
  }

  const rows: SweepRow[] = [];
  for (let line = 1; line < lines.length; line++) {
    const fields = lines[line].split(",");
    if (fields.length !== CSV_COLUMNS.length) {
      throw new SchemaError(
        `row ${line} has ${fields.length} fields, expected ${CSV_COLUMNS.length}`,
      );
    }
    const values = {} as Record<Column, number>;
    const raw = {} as Record<Column, string>;
    CSV_COLUMNS.forEach((column, i) => {
      const value = Number(fields[i]);
      if (!Number.isFinite(value)) {
        throw new SchemaError(`row ${line}, column ${column}: not a number (${fields[i]})`);
      }
      values[column] = value;
      raw[column] = fields[i];
    });
    rows.push({ values, raw });
  }
  if (rows.length === 0) {
    throw new SchemaError("CSV has a header but no rows");
  }
  return rows;
}
