/** Figure rendering from a run directory.
 *
 * Kinds: convergence (D(eps) log-log with recomputed fitted slopes),
 * pairings (quantum vs classical overlays per probe), conservation
 * (norm/energy drift and the singular-potential L2 trace), ladders
 * (mass-near-singularity and/or tail ladders), heatmap (exported
 * phase-space fields, negative regions contoured).
 */

import { mkdirSync, writeFileSync } from "fs";
import { join } from "path";

import {
  FieldSnapshot,
  listFields,
  loadField,
  loadRun,
  loadTable,
  hasArtifact,
  RunDirectory,
} from "./artifacts.js";
import { numericColumn, column, Table } from "./csv.js";
import { MissingArtifact } from "./errors.js";
import { loglogFit } from "./fit.js";
import { diverging, encodePng } from "./png.js";
import { fmt, renderChart, Series, PALETTE } from "./svg.js";

export const FIGURE_KINDS = [
  "convergence",
  "pairings",
  "conservation",
  "ladders",
  "heatmap",
] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureJob {
  runDir: string;
  kind: FigureKind;
  format?: "svg" | "png";
  outDir?: string;
}

function caption(run: RunDirectory, extra = ""): string {
  const tag = `run ${run.configHash.slice(0, 12)}`;
  return extra ? `${tag} | ${extra}` : tag;
}

function uniqueSorted(xs: number[]): number[] {
  return [...new Set(xs)].sort((a, b) => a - b);
}

function rowsFor(t: Table, pred: (row: string[]) => boolean): string[][] {
  return t.rows.filter(pred);
}

/** Recompute the final-snapshot D(eps) slope from distances.csv
 * (the producer's fit must agree to 1e-9; asserted by the tests). */
export function recomputedFinalSlope(run: RunDirectory): number {
  const t = loadTable(run, "distances.csv");
  const eps = numericColumn(t, "eps");
  const times = numericColumn(t, "t");
  const dist = numericColumn(t, "weak_distance");
  const tFinal = Math.max(...times);
  const xs: number[] = [];
  const ys: number[] = [];
  for (let i = 0; i < eps.length; i++) {
    if (times[i] === tFinal) {
      xs.push(eps[i]);
      ys.push(dist[i]);
    }
  }
  return loglogFit(xs, ys).slope;
}

export function persistedFinalSlope(run: RunDirectory): number | undefined {
  const rates = run.results.rates;
  if (!rates || rates.length === 0) return undefined;
  const last = rates[rates.length - 1];
  return last.slope;
}

function renderConvergence(run: RunDirectory): string {
  const t = loadTable(run, "distances.csv");
  const eps = numericColumn(t, "eps");
  const times = numericColumn(t, "t");
  const dist = numericColumn(t, "weak_distance");
  const snapTimes = uniqueSorted(times);
  const series: Series[] = snapTimes.map((st, i) => {
    const xs: number[] = [];
    const ys: number[] = [];
    for (let j = 0; j < eps.length; j++) {
      if (times[j] === st) {
        xs.push(eps[j]);
        ys.push(dist[j]);
      }
    }
    const order = xs.map((_, k) => k).sort((a, b) => xs[a] - xs[b]);
    return {
      xs: order.map((k) => xs[k]),
      ys: order.map((k) => ys[k]),
      label: `t = ${fmt(st)}`,
      color: PALETTE[i % PALETTE.length],
    };
  });
  let slopeNote = "";
  try {
    const slope = recomputedFinalSlope(run);
    const persisted = persistedFinalSlope(run);
    slopeNote =
      `fitted slope (final t): ${slope.toFixed(6)}` +
      (persisted !== undefined ? ` (persisted ${persisted.toFixed(6)})` : "");
  } catch {
    slopeNote = "slope fit degenerate (distances at noise floor)";
  }
  return renderChart(series, {
    xKind: "log",
    yKind: "log",
    xLabel: "eps",
    yLabel: "weak distance",
    title: "Weak distance vs eps",
    caption: caption(run, slopeNote),
  });
}

function renderPairings(run: RunDirectory): string {
  const t = loadTable(run, "pairings.csv");
  const eps = numericColumn(t, "eps");
  const times = numericColumn(t, "t");
  const labels = column(t, "phi_id");
  const scopes = column(t, "scope");
  const quantum = numericColumn(t, "quantum");
  const classical = numericColumn(t, "classical");
  const epsMin = Math.min(...eps);
  const probeLabels = [...new Set(labels.filter((_, i) => scopes[i] === "standard"))].slice(0, 5);
  const series: Series[] = [];
  probeLabels.forEach((pl, i) => {
    const xs: number[] = [];
    const q: number[] = [];
    const c: number[] = [];
    for (let j = 0; j < labels.length; j++) {
      if (labels[j] === pl && eps[j] === epsMin) {
        xs.push(times[j]);
        q.push(quantum[j]);
        c.push(classical[j]);
      }
    }
    series.push({ xs, ys: q, label: `${pl} quantum`, color: PALETTE[i] });
    series.push({ xs, ys: c, label: `${pl} classical`, color: PALETTE[i], dashed: true });
  });
  return renderChart(series, {
    xLabel: "t",
    yLabel: "<W, phi>",
    title: `Pairings, quantum vs classical (eps = ${fmt(epsMin)})`,
    caption: caption(run),
  });
}

function renderConservation(run: RunDirectory): string {
  const t = loadTable(run, "conservation.csv");
  const eps = numericColumn(t, "eps");
  const times = numericColumn(t, "t");
  const norm = numericColumn(t, "norm");
  const energy = numericColumn(t, "energy");
  const sing = numericColumn(t, "singular_l2");
  const epsVals = uniqueSorted(eps);
  const series: Series[] = [];
  epsVals.forEach((e, i) => {
    const idx = times.map((_, j) => j).filter((j) => eps[j] === e);
    const n0 = norm[idx[0]];
    const e0 = energy[idx[0]];
    series.push({
      xs: idx.map((j) => times[j]),
      ys: idx.map((j) => Math.abs(norm[j] - n0) + 1e-18),
      label: `|norm drift| eps=${fmt(e)}`,
      color: PALETTE[i % PALETTE.length],
    });
    series.push({
      xs: idx.map((j) => times[j]),
      ys: idx.map((j) => Math.abs(energy[j] - e0) + 1e-18),
      label: `|energy drift| eps=${fmt(e)}`,
      color: PALETTE[i % PALETTE.length],
      dashed: true,
    });
    if (sing.some((v) => v !== 0)) {
      series.push({
        xs: idx.map((j) => times[j]),
        ys: idx.map((j) => sing[j] + 1e-18),
        label: `||U_s Psi||^2 eps=${fmt(e)}`,
        color: PALETTE[(i + 5) % PALETTE.length],
      });
    }
  });
  return renderChart(series, {
    yKind: "log",
    xLabel: "t",
    yLabel: "drift / value",
    title: "Conservation traces",
    caption: caption(run),
  });
}

function renderLadders(run: RunDirectory): string {
  const series: Series[] = [];
  let which = "";
  if (hasArtifact(run, "mass_ladder.csv")) {
    const t = loadTable(run, "mass_ladder.csv");
    const eps = numericColumn(t, "eps");
    const deltas = numericColumn(t, "delta");
    const mass = numericColumn(t, "mass");
    uniqueSorted(eps).forEach((e, i) => {
      const byDelta = new Map<number, number>();
      for (let j = 0; j < eps.length; j++) {
        if (eps[j] === e) byDelta.set(deltas[j], Math.max(byDelta.get(deltas[j]) ?? 0, mass[j]));
      }
      const xs = [...byDelta.keys()].sort((a, b) => a - b);
      const ys = xs.map((d) => byDelta.get(d)!);
      let label = `mass(delta), eps=${fmt(e)}`;
      try {
        label += `, slope ${loglogFit(xs, ys).slope.toFixed(2)}`;
      } catch {
        /* at noise floor */
      }
      series.push({ xs, ys, label, color: PALETTE[i % PALETTE.length] });
    });
    which = "mass near singular set";
  }
  if (hasArtifact(run, "tail_ladder.csv")) {
    const t = loadTable(run, "tail_ladder.csv");
    const eps = numericColumn(t, "eps");
    const rs = numericColumn(t, "R");
    const tail = numericColumn(t, "tail");
    uniqueSorted(eps).forEach((e, i) => {
      const byR = new Map<number, number>();
      for (let j = 0; j < eps.length; j++) {
        if (eps[j] === e) byR.set(rs[j], Math.max(byR.get(rs[j]) ?? 0, tail[j]));
      }
      const xs = [...byR.keys()].sort((a, b) => a - b);
      series.push({
        xs,
        ys: xs.map((r) => byR.get(r)! + 1e-18),
        label: `tail(R), eps=${fmt(e)}`,
        color: PALETTE[(i + 3) % PALETTE.length],
        dashed: true,
      });
    });
    which = which ? which + " + tails" : "tail masses";
  }
  if (series.length === 0) throw new MissingArtifact("mass_ladder.csv / tail_ladder.csv");
  return renderChart(series, {
    xKind: "log",
    yKind: "log",
    xLabel: "delta / R",
    yLabel: "mass",
    title: `Ladders: ${which}`,
    caption: caption(run, "max over snapshots per rung"),
  });
}

/** Marching-squares zero-level contour segments for a 2D field. */
export function zeroContours(
  vals: Float64Array,
  nx: number,
  ny: number,
): Array<[number, number, number, number]> {
  const segs: Array<[number, number, number, number]> = [];
  const v = (i: number, j: number) => vals[i * ny + j];
  const lerp = (a: number, b: number) => (a === b ? 0.5 : a / (a - b));
  for (let i = 0; i < nx - 1; i++) {
    for (let j = 0; j < ny - 1; j++) {
      const c = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
      let mask = 0;
      for (let k = 0; k < 4; k++) if (c[k] < 0) mask |= 1 << k;
      if (mask === 0 || mask === 15) continue;
      const pts: Array<[number, number]> = [];
      if (c[0] * c[1] < 0) pts.push([i + lerp(c[0], c[1]), j]);
      if (c[1] * c[2] < 0) pts.push([i + 1, j + lerp(c[1], c[2])]);
      if (c[3] * c[2] < 0) pts.push([i + lerp(c[3], c[2]), j + 1]);
      if (c[0] * c[3] < 0) pts.push([i, j + lerp(c[0], c[3])]);
      for (let k = 0; k + 1 < pts.length; k += 2) {
        segs.push([pts[k][0], pts[k][1], pts[k + 1][0], pts[k + 1][1]]);
      }
    }
  }
  return segs;
}

function heatmapPng(field: FieldSnapshot): Buffer {
  if (field.shape.length !== 2) {
    throw new Error(`heatmap needs a 2D field, got shape ${field.shape.join("x")}`);
  }
  const [nx, ny] = field.shape;
  const vals = field.re;
  let vmax = 0;
  for (const v of vals) vmax = Math.max(vmax, Math.abs(v));
  if (vmax === 0) vmax = 1;
  const rgba = new Uint8Array(nx * ny * 4);
  // rows of the image are the second axis reversed (larger p up)
  for (let j = 0; j < ny; j++) {
    for (let i = 0; i < nx; i++) {
      const v = vals[i * ny + (ny - 1 - j)] / vmax;
      const [r, g, b] = diverging(v);
      const k = (j * nx + i) * 4;
      rgba[k] = r;
      rgba[k + 1] = g;
      rgba[k + 2] = b;
      rgba[k + 3] = 255;
    }
  }
  return encodePng(nx, ny, rgba);
}

function heatmapSvg(run: RunDirectory, field: FieldSnapshot): string {
  const [nx, ny] = field.shape;
  const png = heatmapPng(field).toString("base64");
  let neg = 0;
  let min = Infinity;
  let max = -Infinity;
  for (const v of field.re) {
    if (v < 0) neg++;
    min = Math.min(min, v);
    max = Math.max(max, v);
  }
  const segs = zeroContours(field.re, nx, ny);
  const W = 640;
  const H = 640 + 60;
  const sx = (i: number) => 40 + (i / (nx - 1)) * (W - 80);
  const sy = (j: number) => 40 + (1 - j / (ny - 1)) * (W - 80);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica,Arial,sans-serif">`,
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="40" y="24" font-size="15" font-weight="bold">${field.kind} at t = ${fmt(field.time)}, eps = ${fmt(field.eps)}</text>`,
  );
  parts.push(
    `<image x="40" y="40" width="${W - 80}" height="${W - 80}" preserveAspectRatio="none" href="data:image/png;base64,${png}"/>`,
  );
  for (const [x0, y0, x1, y1] of segs) {
    parts.push(
      `<line x1="${fmt(sx(x0))}" y1="${fmt(sy(y0))}" x2="${fmt(sx(x1))}" y2="${fmt(sy(y1))}" stroke="#004400" stroke-width="0.7"/>`,
    );
  }
  parts.push(
    `<rect x="40" y="40" width="${W - 80}" height="${W - 80}" fill="none" stroke="#333"/>`,
  );
  parts.push(
    `<text x="40" y="${H - 24}" font-size="11">min ${min.toExponential(3)}, max ${max.toExponential(3)}; negative cells: ${neg} (zero level contoured)</text>`,
  );
  parts.push(`<text x="40" y="${H - 8}" font-size="9" fill="#666">${caption(run)}</text>`);
  parts.push("</svg>");
  return parts.join("\n");
}

export function render(job: FigureJob): string[] {
  const run = loadRun(job.runDir);
  const outDir = job.outDir ?? join(job.runDir, "figures");
  mkdirSync(outDir, { recursive: true });
  const format = job.format ?? "svg";
  const written: string[] = [];
  const put = (name: string, payload: string | Buffer) => {
    const p = join(outDir, name);
    writeFileSync(p, payload);
    written.push(p);
  };
  switch (job.kind) {
    case "convergence":
      put("convergence.svg", renderConvergence(run));
      break;
    case "pairings":
      put("pairings.svg", renderPairings(run));
      break;
    case "conservation":
      put("conservation.svg", renderConservation(run));
      break;
    case "ladders":
      put("ladders.svg", renderLadders(run));
      break;
    case "heatmap": {
      const fields = listFields(job.runDir).filter(
        (b) => loadField(job.runDir, b).shape.length === 2,
      );
      if (fields.length === 0) throw new MissingArtifact("<field>.bin");
      for (const base of fields) {
        const field = loadField(job.runDir, base);
        if (format === "png") put(`${base}.png`, heatmapPng(field));
        else put(`${base}.svg`, heatmapSvg(run, field));
      }
      break;
    }
  }
  return written;
}

export function renderAll(runDir: string, outDir?: string, format?: "svg" | "png"): string[] {
  const written: string[] = [];
  for (const kind of FIGURE_KINDS) {
    written.push(...render({ runDir, kind, outDir, format }));
  }
  return written;
}
