#!/usr/bin/env node
/** qcmd-report <run_dir> [--kind all|convergence|pairings|conservation|ladders|heatmap]
 *               [--format svg|png] [--out DIR]
 */

import { FIGURE_KINDS, FigureKind, render, renderAll } from "./figures.js";
import { MissingArtifact, SchemaVersionMismatch } from "./errors.js";

function main(argv: string[]): number {
  const args = argv.slice(2);
  if (args.length === 0 || args[0].startsWith("--")) {
    console.error("usage: qcmd-report <run_dir> [--kind K] [--format svg|png] [--out DIR]");
    return 2;
  }
  const runDir = args[0];
  let kind = "all";
  let format: "svg" | "png" = "svg";
  let outDir: string | undefined;
  for (let i = 1; i < args.length; i++) {
    if (args[i] === "--kind") kind = args[++i];
    else if (args[i] === "--format") format = args[++i] as "svg" | "png";
    else if (args[i] === "--out") outDir = args[++i];
    else {
      console.error(`unknown argument ${args[i]}`);
      return 2;
    }
  }
  try {
    const written =
      kind === "all"
        ? renderAll(runDir, outDir, format)
        : render({ runDir, kind: kind as FigureKind, outDir, format });
    for (const w of written) console.log(w);
    return 0;
  } catch (err) {
    if (err instanceof MissingArtifact || err instanceof SchemaVersionMismatch) {
      console.error(String(err));
      return 1;
    }
    throw err;
  }
}

process.exit(main(process.argv));
