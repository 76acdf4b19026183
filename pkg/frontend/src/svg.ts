/** Minimal deterministic SVG chart primitives (no DOM, no randomness). */

export const WIDTH = 720;
export const HEIGHT = 440;
export const MARGIN = { top: 40, right: 90, bottom: 56, left: 78 };

export interface Scale {
  (v: number): number;
  ticks(): number[];
}

const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  return Number(v.toFixed(3)).toString();
}

export function fmtTick(v: number): string {
  const a = Math.abs(v);
  if (a >= 1_000_000) return `${fmt(v / 1_000_000)}M`;
  if (a >= 1_000) return `${fmt(v / 1_000)}k`;
  return fmt(v);
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (hi <= lo) return [lo];
  const span = hi - lo;
  const step0 = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / (n * step0);
  const step = step0 * (err >= 7.5 ? 10 : err >= 3 ? 5 : err >= 1.5 ? 2 : 1);
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-9 * span; v += step) out.push(Number(v.toPrecision(12)));
  return out;
}

export function linearScale(lo: number, hi: number, rlo: number, rhi: number): Scale {
  const span = hi - lo || 1;
  const f = ((v: number) => rlo + ((v - lo) / span) * (rhi - rlo)) as Scale;
  f.ticks = () => niceTicks(lo, hi);
  return f;
}

export function log2Scale(lo: number, hi: number, rlo: number, rhi: number): Scale {
  const llo = Math.log2(Math.max(lo, 1e-12));
  const lhi = Math.log2(Math.max(hi, 1e-12));
  const span = lhi - llo || 1;
  const f = ((v: number) => rlo + ((Math.log2(Math.max(v, 1e-12)) - llo) / span) * (rhi - rlo)) as Scale;
  f.ticks = () => {
    const out: number[] = [];
    for (let p = Math.ceil(llo); p <= Math.floor(lhi); p++) out.push(2 ** p);
    return out.length ? out : [lo, hi];
  };
  return f;
}

export function log10Scale(lo: number, hi: number, rlo: number, rhi: number): Scale {
  const llo = Math.log10(Math.max(lo, 1e-12));
  const lhi = Math.log10(Math.max(hi, 1e-12));
  const span = lhi - llo || 1;
  const f = ((v: number) => rlo + ((Math.log10(Math.max(v, 1e-12)) - llo) / span) * (rhi - rlo)) as Scale;
  f.ticks = () => {
    const out: number[] = [];
    for (let p = Math.ceil(llo); p <= Math.floor(lhi); p++) out.push(10 ** p);
    return out.length ? out : [lo, hi];
  };
  return f;
}

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#ff7f0e",
  "#9467bd",
  "#8c564b",
  "#17becf",
];

export function colorFor(names: string[], name: string): string {
  return PALETTE[names.indexOf(name) % PALETTE.length];
}

export interface ChartFrame {
  x: Scale;
  y: Scale;
  y2?: Scale;
  parts: string[];
}

export function frame(
  title: string,
  xLabel: string,
  yLabel: string,
  x: Scale,
  y: Scale,
  opts: { xTickFmt?: (v: number) => string; y2?: Scale; y2Label?: string } = {},
): ChartFrame {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15" font-weight="bold">${title}</text>`,
  );
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  const tickFmt = opts.xTickFmt ?? fmtTick;
  for (const t of x.ticks()) {
    const px = x(t);
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(
      `<text x="${fmt(px)}" y="${y0 + 20}" text-anchor="middle" font-size="11">${tickFmt(t)}</text>`,
    );
  }
  for (const t of y.ticks()) {
    const py = y(t);
    parts.push(`<line x1="${x0 - 5}" y1="${fmt(py)}" x2="${x0}" y2="${fmt(py)}" stroke="black"/>`);
    parts.push(
      `<line x1="${x0}" y1="${fmt(py)}" x2="${x1}" y2="${fmt(py)}" stroke="#dddddd" stroke-width="0.6"/>`,
    );
    parts.push(
      `<text x="${x0 - 9}" y="${fmt(py + 4)}" text-anchor="end" font-size="11">${fmtTick(t)}</text>`,
    );
  }
  if (opts.y2) {
    for (const t of opts.y2.ticks()) {
      const py = opts.y2(t);
      parts.push(`<line x1="${x1}" y1="${fmt(py)}" x2="${x1 + 5}" y2="${fmt(py)}" stroke="black"/>`);
      parts.push(
        `<text x="${x1 + 9}" y="${fmt(py + 4)}" text-anchor="start" font-size="11">${fmtTick(t)}</text>`,
      );
    }
    if (opts.y2Label) {
      parts.push(
        `<text transform="translate(${WIDTH - 14},${(y0 + y1) / 2}) rotate(90)" text-anchor="middle" font-size="12">${opts.y2Label}</text>`,
      );
    }
  }
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 14}" text-anchor="middle" font-size="12">${xLabel}</text>`,
  );
  parts.push(
    `<text transform="translate(20,${(y0 + y1) / 2}) rotate(-90)" text-anchor="middle" font-size="12">${yLabel}</text>`,
  );
  return { x, y, y2: opts.y2, parts };
}

export function polyline(f: ChartFrame, pts: { x: number; y: number }[], color: string, opts: { dashed?: boolean; y2?: boolean } = {}): void {
  const ys = opts.y2 && f.y2 ? f.y2 : f.y;
  const d = pts.map((p) => `${fmt(f.x(p.x))},${fmt(ys(p.y))}`).join(" ");
  const dash = opts.dashed ? ` stroke-dasharray="6,4"` : "";
  f.parts.push(
    `<polyline points="${d}" fill="none" stroke="${color}" stroke-width="1.8"${dash}/>`,
  );
  for (const p of pts) {
    f.parts.push(
      `<circle cx="${fmt(f.x(p.x))}" cy="${fmt(ys(p.y))}" r="2.4" fill="${color}"/>`,
    );
  }
}

export function bar(f: ChartFrame, cx: number, w: number, v: number, color: string): void {
  const y0 = HEIGHT - MARGIN.bottom;
  const top = f.y(v);
  f.parts.push(
    `<rect x="${fmt(cx - w / 2)}" y="${fmt(top)}" width="${fmt(w)}" height="${fmt(Math.max(0, y0 - top))}" fill="${color}"/>`,
  );
}

export function legend(f: ChartFrame, entries: { label: string; color: string; dashed?: boolean }[]): void {
  const lx = MARGIN.left + 10;
  let ly = MARGIN.top + 8;
  for (const e of entries) {
    const dash = e.dashed ? ` stroke-dasharray="6,4"` : "";
    f.parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" stroke="${e.color}" stroke-width="2"${dash}/>`,
    );
    f.parts.push(`<text x="${lx + 32}" y="${ly + 4}" font-size="11">${e.label}</text>`);
    ly += 16;
  }
}

export function finish(f: ChartFrame): string {
  return f.parts.join("\n") + "\n</svg>\n";
}

export function plotRange(): { x0: number; x1: number; y0: number; y1: number } {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

export const plotWidth = PLOT_W;
export const plotHeight = PLOT_H;
