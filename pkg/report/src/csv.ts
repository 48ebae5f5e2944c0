/** Reader for the run directory's plain CSV files.
 *
 * The producing side writes unquoted comma-separated rows with a single
 * header line and full-precision floats, so a split-based parser is exact
 * for this format.
 */

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) return { header: [], rows: [] };
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  return { header, rows };
}

export function column(t: Table, name: string): string[] {
  const i = t.header.indexOf(name);
  if (i < 0) throw new Error(`no column ${name} in [${t.header.join(", ")}]`);
  return t.rows.map((r) => r[i]);
}

export function numericColumn(t: Table, name: string): number[] {
  return column(t, name).map(Number);
}
