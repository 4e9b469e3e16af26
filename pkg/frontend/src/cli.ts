/**
 * `plots render --csv <path> --figure fig1|fig2 --out <path>`
 *
 * Exit codes: 0 written, 2 usage error, 1 unreadable or invalid data.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { renderFigure } from "./render.js";

const USAGE =
  "usage: plots render --csv <path> --figure fig1|fig2 --out <path>";

function parseArgs(argv: string[]): { csv: string; figure: string; out: string } | null {
  if (argv[0] !== "render") {
    return null;
  }
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      return null;
    }
    flags.set(key.slice(2), value);
  }
  const csv = flags.get("csv");
  const figure = flags.get("figure");
  const out = flags.get("out");
  if (!csv || !figure || !out || flags.size !== 3) {
    return null;
  }
  return { csv, figure, out };
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  if (args === null) {
    console.error(USAGE);
    return 2;
  }
  if (args.figure !== "fig1" && args.figure !== "fig2") {
    console.error(`unknown figure "${args.figure}"; expected fig1 or fig2`);
    return 2;
  }
  let csvText: string;
  try {
    csvText = readFileSync(args.csv, "utf8");
  } catch (err) {
    console.error(`cannot read ${args.csv}: ${(err as Error).message}`);
    return 1;
  }
  let svg: string;
  try {
    svg = renderFigure(csvText, args.figure);
  } catch (err) {
    console.error(`render failed: ${(err as Error).message}`);
    return 1;
  }
  writeFileSync(args.out, svg);
  console.log(args.out);
  return 0;
}
