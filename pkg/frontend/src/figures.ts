/** Figure specs: one renderer per experiment id, all pure functions of rows. */

import {
  BenchRow,
  SchemaError,
  median,
  seriesByVariant,
} from "./schema.js";
import {
  bar,
  colorFor,
  finish,
  fmtTick,
  frame,
  legend,
  linearScale,
  log10Scale,
  log2Scale,
  plotRange,
  polyline,
} from "./svg.js";

export interface FigureSpec {
  id: string;
  /** experiment column value the figure consumes */
  experiment: string;
  render(rows: BenchRow[]): string;
}

function only(rows: BenchRow[], experiment: string): BenchRow[] {
  const out = rows.filter((r) => r.experiment === experiment);
  if (out.length === 0) {
    throw new SchemaError(`no rows for experiment '${experiment}'`);
  }
  return out;
}

function lineChart(
  rows: BenchRow[],
  phase: string,
  title: string,
  xLabel: string,
  opts: { xLog2?: boolean } = {},
): string {
  const series = seriesByVariant(rows, phase);
  if (series.size === 0) throw new SchemaError(`no '${phase}' rows`);
  const names = [...series.keys()].sort();
  const allPts = names.flatMap((n) => series.get(n)!);
  const { x0, x1, y0, y1 } = plotRange();
  const xs = allPts.map((p) => p.x);
  const ys = allPts.map((p) => p.y);
  const x = (opts.xLog2 ? log2Scale : linearScale)(
    Math.min(...xs),
    Math.max(...xs),
    x0,
    x1,
  );
  const y = linearScale(0, Math.max(...ys) * 1.08, y0, y1);
  const f = frame(title, xLabel, "time per access [ns]", x, y);
  for (const n of names) {
    polyline(f, series.get(n)!, colorFor(names, n));
  }
  legend(
    f,
    names.map((n) => ({ label: n, color: colorFor(names, n) })),
  );
  return finish(f);
}

function renderMotivation(rows: BenchRow[]): string {
  return lineChart(
    only(rows, "motivation"),
    "access",
    "Lookups through a traditional vs a shortcut inner node (fan-in 1)",
    "indexed leaf pages",
    { xLog2: true },
  );
}

function renderFanin(rows: BenchRow[]): string {
  return lineChart(
    only(rows, "fanin"),
    "access",
    "Impact of fan-in on lookup cost",
    "fan-in (slots per leaf)",
    { xLog2: true },
  );
}

const CREATION_PHASES = [
  "allocate",
  "set_indirections",
  "populate",
  "first_access",
  "second_access",
];

function renderCreation(rows: BenchRow[]): string {
  const mine = only(rows, "creation");
  const variants = [...new Set(mine.map((r) => r.variant))].sort();
  const groups: { phase: string; variant: string; v: number }[] = [];
  for (const phase of CREATION_PHASES) {
    for (const variant of variants) {
      const ys = mine
        .filter((r) => r.phase === phase && r.variant === variant)
        .map((r) => r.normalized_nanos);
      if (ys.length) groups.push({ phase, variant, v: median(ys) });
    }
  }
  if (groups.length === 0) throw new SchemaError("no creation phase rows");
  const { x0, x1, y0, y1 } = plotRange();
  const lo = Math.max(
    Math.min(...groups.map((g) => g.v).filter((v) => v > 0)) / 2,
    1e-3,
  );
  const hi = Math.max(...groups.map((g) => g.v)) * 2;
  const y = log10Scale(lo, hi, y0, y1);
  const x = linearScale(0, CREATION_PHASES.length, x0, x1);
  x.ticks = () => [];
  const f = frame(
    "Creation and access cost per phase (normalized per page / per access)",
    "phase",
    "normalized time [ns, log]",
    x,
    y,
  );
  const slot = (x1 - x0) / CREATION_PHASES.length;
  const barW = (slot * 0.7) / variants.length;
  CREATION_PHASES.forEach((phase, pi) => {
    const cx = x0 + slot * (pi + 0.5);
    f.parts.push(
      `<text x="${cx}" y="${y0 + 20}" text-anchor="middle" font-size="10">${phase}</text>`,
    );
    variants.forEach((variant, vi) => {
      const g = groups.find((g) => g.phase === phase && g.variant === variant);
      if (g) {
        bar(f, cx + (vi - (variants.length - 1) / 2) * barW, barW * 0.92, g.v, colorFor(variants, variant));
      }
    });
  });
  legend(
    f,
    variants.map((v) => ({ label: v, color: colorFor(variants, v) })),
  );
  return finish(f);
}

function renderShootdown(rows: BenchRow[]): string {
  const mine = only(rows, "shootdown");
  const kinds = [
    { phase: "remap", label: "shooter: per remap" },
    { phase: "read_during", label: "reader: per page (shooting)" },
    { phase: "read_alone", label: "reader: per page (alone)" },
  ].filter((k) => mine.some((r) => r.phase === k.phase));
  const readers = [...new Set(mine.map((r) => r.parameter))].sort((a, b) => a - b);
  const values: { k: number; reader: number; v: number }[] = [];
  kinds.forEach((kind, ki) => {
    for (const rd of readers) {
      const ys = mine
        .filter((r) => r.phase === kind.phase && r.parameter === rd)
        .map((r) => r.normalized_nanos);
      if (ys.length) values.push({ k: ki, reader: rd, v: median(ys) });
    }
  });
  const { x0, x1, y0, y1 } = plotRange();
  const lo = Math.max(Math.min(...values.map((g) => g.v)) / 2, 1e-3);
  const hi = Math.max(...values.map((g) => g.v)) * 2;
  const y = log10Scale(lo, hi, y0, y1);
  const x = linearScale(0, readers.length, x0, x1);
  x.ticks = () => [];
  const f = frame(
    "Remap invalidation cost vs concurrent readers",
    "concurrent reading threads",
    "normalized time [ns, log]",
    x,
    y,
  );
  const slot = (x1 - x0) / readers.length;
  const names = kinds.map((k) => k.label);
  const barW = (slot * 0.72) / kinds.length;
  readers.forEach((rd, ri) => {
    const cx = x0 + slot * (ri + 0.5);
    f.parts.push(
      `<text x="${cx}" y="${y0 + 20}" text-anchor="middle" font-size="11">${rd}</text>`,
    );
    kinds.forEach((kind, ki) => {
      const g = values.find((g) => g.k === ki && g.reader === rd);
      if (g) {
        bar(f, cx + (ki - (kinds.length - 1) / 2) * barW, barW * 0.92, g.v, colorFor(names, kind.label));
      }
    });
  });
  legend(
    f,
    kinds.map((k) => ({ label: k.label, color: colorFor(names, k.label) })),
  );
  return finish(f);
}

function renderInsertions(rows: BenchRow[]): string {
  return lineChart(
    only(rows, "workloads"),
    "insert_cumulative",
    "Insertion cost over the key sequence (cumulative, per insert)",
    "entries inserted",
  );
}

function renderLookups(rows: BenchRow[]): string {
  const mine = only(rows, "workloads").filter((r) => r.phase === "lookup");
  if (mine.length === 0) throw new SchemaError("no 'lookup' rows");
  const variants = [...new Set(mine.map((r) => r.variant))].sort();
  const meds = variants.map((v) =>
    median(mine.filter((r) => r.variant === v).map((r) => r.normalized_nanos)),
  );
  const { x0, x1, y0, y1 } = plotRange();
  const y = linearScale(0, Math.max(...meds) * 1.15, y0, y1);
  const x = linearScale(0, variants.length, x0, x1);
  x.ticks = () => [];
  const f = frame(
    "Random hit-lookup cost on the filled indexes",
    "variant",
    "time per lookup [ns]",
    x,
    y,
  );
  const slot = (x1 - x0) / variants.length;
  variants.forEach((v, i) => {
    const cx = x0 + slot * (i + 0.5);
    bar(f, cx, slot * 0.55, meds[i], colorFor(variants, v));
    f.parts.push(
      `<text x="${cx}" y="${y0 + 20}" text-anchor="middle" font-size="11">${v}</text>`,
    );
    f.parts.push(
      `<text x="${cx}" y="${y(meds[i]) - 6}" text-anchor="middle" font-size="10">${fmtTick(meds[i])}</text>`,
    );
  });
  return finish(f);
}

function renderMixed(rows: BenchRow[]): string {
  const mine = only(rows, "workloads");
  const lookups = seriesByVariant(
    mine.filter((r) => r.phase === "mixed_lookup"),
    "mixed_lookup",
  );
  if (lookups.size === 0) throw new SchemaError("no 'mixed_lookup' rows");
  const tv = mine.filter((r) => r.phase === "mixed_version_traditional");
  const sv = mine.filter((r) => r.phase === "mixed_version_shortcut");
  const names = [...lookups.keys()].sort();
  const pts = names.flatMap((n) => lookups.get(n)!);
  const versions = [...tv, ...sv].map((r) => r.nanos);
  const { x0, x1, y0, y1 } = plotRange();
  const x = linearScale(
    Math.min(...pts.map((p) => p.x)),
    Math.max(...pts.map((p) => p.x)),
    x0,
    x1,
  );
  const y = linearScale(0, Math.max(...pts.map((p) => p.y)) * 1.1, y0, y1);
  const y2 = linearScale(
    Math.min(...versions, 0),
    Math.max(...versions, 1) * 1.02,
    y0,
    y1,
  );
  const f = frame(
    "Mixed workload: lookup cost and directory versions per checkpoint",
    "accesses",
    "time per lookup [ns]",
    x,
    y,
    { y2, y2Label: "version number" },
  );
  for (const n of names) {
    polyline(f, lookups.get(n)!, colorFor(names, n));
  }
  const vSeries = [
    { rows: tv, label: "traditional version", color: "#555555", dashed: false },
    { rows: sv, label: "shortcut version", color: "#aa8800", dashed: true },
  ].filter((s) => s.rows.length > 0);
  for (const s of vSeries) {
    const p = s.rows
      .map((r) => ({ x: r.parameter, y: r.nanos }))
      .sort((a, b) => a.x - b.x);
    polyline(f, p, s.color, { dashed: s.dashed, y2: true });
  }
  legend(f, [
    ...names.map((n) => ({ label: n, color: colorFor(names, n) })),
    ...vSeries.map((s) => ({ label: s.label, color: s.color, dashed: s.dashed })),
  ]);
  return finish(f);
}

export const FIGURES: FigureSpec[] = [
  { id: "motivation", experiment: "motivation", render: renderMotivation },
  { id: "creation", experiment: "creation", render: renderCreation },
  { id: "fanin", experiment: "fanin", render: renderFanin },
  { id: "shootdown", experiment: "shootdown", render: renderShootdown },
  { id: "insertions", experiment: "workloads", render: renderInsertions },
  { id: "lookups", experiment: "workloads", render: renderLookups },
  { id: "mixed", experiment: "workloads", render: renderMixed },
];

export function figureById(id: string): FigureSpec {
  const spec = FIGURES.find((f) => f.id === id);
  if (!spec) {
    throw new SchemaError(
      `unknown figure '${id}'; known: ${FIGURES.map((f) => f.id).join(", ")}`,
    );
  }
  return spec;
}
