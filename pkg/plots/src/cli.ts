#!/usr/bin/env node
/**
 * Render a figure from a conslab CSV artifact.
 *
 * Usage:
 *   conslab-plots <spec.json>
 *   conslab-plots --kind convergence --csv convergence.csv --out fig.svg
 *   conslab-plots --kind ratio_hist --csv wente.csv --out hist.svg [--column ratio_sup] [--ref 0.159155]
 *   conslab-plots --kind sweep --csv frames.csv --out sweep.svg [--x lam] [--y empirical_C] [--series n]
 *
 * Exits 0 on success, 1 on a rendering/schema error, 2 on usage errors.
 * No file is written when rendering fails.
 */

import { readFileSync, writeFileSync } from "fs";
import { FigureSpec, renderFigure } from "./figures.js";

const USAGE =
  "usage: conslab-plots <spec.json> | --kind K --csv FILE --out FILE " +
  "[--title T] [--column C] [--ref V] [--x C] [--y C] [--series C] [--bins N]";

export function parseArgs(argv: string[]): FigureSpec {
  if (argv.length === 1 && !argv[0].startsWith("--")) {
    const spec = JSON.parse(readFileSync(argv[0], "utf-8")) as FigureSpec;
    if (!spec.kind || !spec.csv || !spec.out) {
      throw new UsageError("spec file needs kind, csv, out");
    }
    return spec;
  }
  const opts: Record<string, string[]> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new UsageError(USAGE);
    }
    (opts[key.slice(2)] ??= []).push(argv[i + 1]);
  }
  const one = (k: string): string | undefined => opts[k]?.[opts[k].length - 1];
  const kind = one("kind");
  const csv = one("csv");
  const out = one("out");
  if (!kind || !csv || !out) {
    throw new UsageError(USAGE);
  }
  const spec: FigureSpec = {
    kind: kind as FigureSpec["kind"],
    csv,
    out,
    title: one("title"),
    column: one("column"),
    x: one("x"),
    y: one("y"),
    series: one("series"),
  };
  if (opts["ref"]) spec.reference_lines = opts["ref"].map(Number);
  if (one("bins")) spec.bins = Number(one("bins"));
  return spec;
}

export class UsageError extends Error {}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    if (argv.length === 0) throw new UsageError(USAGE);
    spec = parseArgs(argv);
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 2;
  }
  try {
    const csvText = readFileSync(spec.csv, "utf-8");
    const svg = renderFigure(spec, csvText);
    writeFileSync(spec.out, svg);
    console.log(`wrote ${spec.out}`);
    return 0;
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("conslab-plots")) {
  process.exit(main(process.argv.slice(2)));
}
