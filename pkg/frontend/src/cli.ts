#!/usr/bin/env node
/** plots CLI: render benchmark CSVs as SVG figures.
 *
 *   plots <figure> <csv> <out.svg>
 *   plots all <dir>            renders every default harness output found
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { FIGURES, figureById } from "./figures.js";
import { SchemaError, parseCsv } from "./schema.js";

/** default harness CSV name per figure id */
const DEFAULT_SOURCES: Record<string, string> = {
  motivation: "motivation.csv",
  creation: "creation.csv",
  fanin: "fanin.csv",
  shootdown: "shootdown.csv",
  insertions: "workloads.csv",
  lookups: "workloads.csv",
  mixed: "workloads.csv",
};

function renderOne(figureId: string, csvPath: string, outPath: string): void {
  const spec = figureById(figureId);
  const rows = parseCsv(fs.readFileSync(csvPath, "utf-8"));
  const svg = spec.render(rows);
  fs.writeFileSync(outPath, svg);
  console.log(`${figureId}: ${csvPath} -> ${outPath}`);
}

export function main(argv: string[]): number {
  try {
    if (argv.length === 2 && argv[0] === "all") {
      const dir = argv[1];
      let rendered = 0;
      for (const spec of FIGURES) {
        const csv = path.join(dir, DEFAULT_SOURCES[spec.id]);
        if (fs.existsSync(csv)) {
          renderOne(spec.id, csv, path.join(dir, `${spec.id}.svg`));
          rendered += 1;
        }
      }
      if (rendered === 0) {
        console.error(`no harness CSVs found in ${dir}`);
        return 1;
      }
      return 0;
    }
    if (argv.length === 3) {
      renderOne(argv[0], argv[1], argv[2]);
      return 0;
    }
    console.error(
      "usage: plots <figure> <csv> <out.svg> | plots all <dir>\n" +
        `figures: ${FIGURES.map((f) => f.id).join(", ")}`,
    );
    return 2;
  } catch (err) {
    if (err instanceof SchemaError) {
      const cols = err.offendingColumns.length
        ? ` (offending columns: ${err.offendingColumns.join(", ")})`
        : "";
      console.error(`schema error: ${err.message}${cols}`);
      return 1;
    }
    throw err;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("plots")) {
  process.exit(main(process.argv.slice(2)));
}
