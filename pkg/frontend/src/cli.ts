#!/usr/bin/env node
/** Plot CLI: render harness CSVs to PNG + SVG.
 *
 *   samopt-plots --input fig1.csv [--input more.csv] --group-by lambda \
 *                [--y subopt] [--x iteration] [--no-log-y] [--title t] --out fig.png
 *
 * Exit codes: 0 success, 1 bad arguments or malformed input.
 */

import { CsvError } from "./csv";
import { DEFAULTS, PlotSpec, renderToFiles } from "./render";

export const USAGE =
  "usage: samopt-plots --input <csv> [--input <csv>...] [--group-by lambda] " +
  "[--y subopt] [--x iteration] [--no-log-y] [--title <t>] --out <fig.png>";

class HelpRequested extends Error {}

export function parseArgs(argv: string[]): PlotSpec {
  const spec: PlotSpec = {
    inputs: [],
    groupBy: DEFAULTS.groupBy,
    y: DEFAULTS.y,
    x: DEFAULTS.x,
    logY: DEFAULTS.logY,
    out: "",
  };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) throw new CsvError(`${arg} expects a value`);
      return argv[++i];
    };
    switch (arg) {
      case "--input":
        spec.inputs.push(...next().split(","));
        break;
      case "--group-by":
        spec.groupBy = next();
        break;
      case "--y":
        spec.y = next();
        break;
      case "--x":
        spec.x = next();
        break;
      case "--out":
        spec.out = next();
        break;
      case "--title":
        spec.title = next();
        break;
      case "--no-log-y":
        spec.logY = false;
        break;
      case "--help":
      case "-h":
        throw new HelpRequested();
      default:
        throw new CsvError(`unknown argument ${arg}`);
    }
  }
  if (spec.inputs.length === 0) throw new CsvError("--input is required (at least one CSV)");
  if (!spec.out) throw new CsvError("--out is required (a .png path)");
  if (!spec.out.endsWith(".png")) throw new CsvError("--out must end in .png (the .svg sibling is emitted too)");
  return spec;
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const { pngPath, svgPath, result } = renderToFiles(spec);
    console.log(`${pngPath} ${svgPath} groups=${result.groups.length}`);
    return 0;
  } catch (err) {
    if (err instanceof HelpRequested) {
      console.log(USAGE);
      return 0;
    }
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
