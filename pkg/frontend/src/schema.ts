/** Benchmark CSV schema: parsing and strict validation. */

export const CSV_HEADER = [
  "experiment",
  "variant",
  "phase",
  "parameter",
  "repetition",
  "nanos",
  "normalized_nanos",
] as const;

export interface BenchRow {
  experiment: string;
  variant: string;
  phase: string;
  parameter: number;
  repetition: number;
  nanos: number;
  normalized_nanos: number;
}

export class SchemaError extends Error {
  constructor(
    message: string,
    readonly offendingColumns: string[] = [],
  ) {
    super(message);
    this.name = "SchemaError";
  }
}

/** Parse CSV text; throws SchemaError on a bad header or an empty body. */
export function parseCsv(text: string): BenchRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file: no header row", [...CSV_HEADER]);
  }
  const header = lines[0].split(",");
  const expected = [...CSV_HEADER];
  if (header.length !== expected.length || header.some((c, i) => c !== expected[i])) {
    const offending = [
      ...header.filter((c) => !expected.includes(c as (typeof CSV_HEADER)[number])),
      ...expected.filter((c) => !header.includes(c)),
    ];
    throw new SchemaError(
      `header mismatch: got [${header.join(",")}], expected [${expected.join(",")}]`,
      offending,
    );
  }
  if (lines.length === 1) {
    throw new SchemaError("no data rows (header only)");
  }
  return lines.slice(1).map((line, i) => {
    const cols = line.split(",");
    if (cols.length !== expected.length) {
      throw new SchemaError(`row ${i + 2}: expected ${expected.length} columns, got ${cols.length}`);
    }
    return {
      experiment: cols[0],
      variant: cols[1],
      phase: cols[2],
      parameter: Number(cols[3]),
      repetition: Number(cols[4]),
      nanos: Number(cols[5]),
      normalized_nanos: Number(cols[6]),
    };
  });
}

export function median(xs: number[]): number {
  if (xs.length === 0) throw new SchemaError("median of empty series");
  const s = [...xs].sort((a, b) => a - b);
  return s[Math.floor(s.length / 2)];
}

/** Collapse repetitions: median normalized_nanos per (variant, parameter). */
export function seriesByVariant(
  rows: BenchRow[],
  phase: string,
): Map<string, { x: number; y: number }[]> {
  const grouped = new Map<string, Map<number, number[]>>();
  for (const r of rows) {
    if (r.phase !== phase) continue;
    let byParam = grouped.get(r.variant);
    if (!byParam) grouped.set(r.variant, (byParam = new Map()));
    let ys = byParam.get(r.parameter);
    if (!ys) byParam.set(r.parameter, (ys = []));
    ys.push(r.normalized_nanos);
  }
  const out = new Map<string, { x: number; y: number }[]>();
  for (const [variant, byParam] of grouped) {
    const pts = [...byParam.entries()]
      .map(([x, ys]) => ({ x, y: median(ys) }))
      .sort((a, b) => a.x - b.x);
    out.set(variant, pts);
  }
  return out;
}
