#!/usr/bin/env node
/** ucert-plot: render certification error-curve CSVs into a figure.
 *
 * Usage: ucert-plot --curves FILE [FILE ...] --out FILE.png [--threshold 0.3333]
 * Exit codes: 0 on success, 2 on schema or input errors.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { readCurvesFile, SchemaError } from "./csv";
import { makeSpec, renderFigure } from "./figure";
import { encodePng } from "./png";
import { renderSvg } from "./svg";

interface Args {
  curves: string[];
  out: string;
  threshold?: number;
  linearX: boolean;
}

export function parseArgs(argv: string[]): Args {
  const curves: string[] = [];
  let out = "";
  let threshold: number | undefined;
  let linearX = false;
  let i = 0;
  while (i < argv.length) {
    const a = argv[i];
    if (a === "--curves") {
      i++;
      while (i < argv.length && !argv[i].startsWith("--")) {
        curves.push(argv[i]);
        i++;
      }
    } else if (a === "--out") {
      out = argv[i + 1] ?? "";
      i += 2;
    } else if (a === "--threshold") {
      threshold = Number(argv[i + 1]);
      i += 2;
    } else if (a === "--linear-x") {
      linearX = true;
      i++;
    } else {
      throw new Error(`unknown argument ${a}`);
    }
  }
  if (curves.length === 0) throw new Error("--curves requires at least one file");
  if (!out) throw new Error("--out is required");
  if (threshold !== undefined && !(threshold > 0 && threshold < 1)) {
    throw new Error("--threshold must lie in (0, 1)");
  }
  return { curves, out, threshold, linearX };
}

export function run(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`ucert-plot: ${(err as Error).message}`);
    return 2;
  }
  try {
    const files = args.curves.map((p) => readCurvesFile(fs.readFileSync(p, "utf8"), path.basename(p)));
    const spec = makeSpec(files, args.threshold, !args.linearX);
    const ext = path.extname(args.out).toLowerCase();
    if (ext === ".svg") {
      fs.writeFileSync(args.out, renderSvg(spec));
    } else if (ext === ".png") {
      const { raster } = renderFigure(spec);
      fs.writeFileSync(args.out, encodePng(raster.width, raster.height, raster.data));
    } else {
      console.error(`ucert-plot: unsupported output format ${ext || "(none)"}; use .png or .svg`);
      return 2;
    }
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`ucert-plot: schema error: ${err.message}`);
      return 2;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`ucert-plot: ${(err as Error).message}`);
      return 2;
    }
    throw err;
  }
  return 0;
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
