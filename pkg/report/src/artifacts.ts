/** Run-directory loading: manifest, persisted results, CSV views, fields.
 *
 * Pure reader -- nothing here ever writes into a run directory.
 */

import { existsSync, readFileSync, readdirSync } from "fs";
import { join } from "path";

import { parseCsv, Table } from "./csv.js";
import { MissingArtifact, SchemaVersionMismatch } from "./errors.js";

export const SCHEMA_VERSION = 1;

export interface RateFit {
  t: number;
  slope?: number;
  intercept?: number;
  residual?: number;
  excluded?: number[];
  error?: string;
}

export interface SweepResults {
  config: Record<string, unknown>;
  cells: Array<Record<string, unknown>>;
  rates: RateFit[];
  metadata: Record<string, unknown>;
}

export interface RunDirectory {
  path: string;
  manifest: Record<string, unknown>;
  results: SweepResults;
  configHash: string;
}

function readText(dir: string, name: string): string {
  const p = join(dir, name);
  if (!existsSync(p)) throw new MissingArtifact(name);
  return readFileSync(p, "utf8");
}

export function loadRun(dir: string): RunDirectory {
  const manifest = JSON.parse(readText(dir, "manifest.json")) as Record<string, unknown>;
  if (manifest["schema_version"] !== SCHEMA_VERSION) {
    throw new SchemaVersionMismatch("manifest.json", manifest["schema_version"], SCHEMA_VERSION);
  }
  const doc = JSON.parse(readText(dir, "results.json")) as Record<string, unknown>;
  if (doc["schema_version"] !== SCHEMA_VERSION) {
    throw new SchemaVersionMismatch("results.json", doc["schema_version"], SCHEMA_VERSION);
  }
  return {
    path: dir,
    manifest,
    results: doc["payload"] as unknown as SweepResults,
    configHash: String(manifest["config_hash"] ?? ""),
  };
}

export function loadTable(run: RunDirectory, name: string): Table {
  return parseCsv(readText(run.path, name));
}

export function hasArtifact(run: RunDirectory, name: string): boolean {
  return existsSync(join(run.path, name));
}

export interface FieldSnapshot {
  kind: string;
  eps: number;
  time: number;
  shape: number[];
  axes: { lower: number[]; extent: number[]; stagger: number[] };
  /** row-major real part (imaginary half of the raw pairs is dropped) */
  re: Float64Array;
  im: Float64Array;
  potentialHash: string;
  baseName: string;
}

/** Load a raw field export (<base>.bin + <base>.json). */
export function loadField(dir: string, baseName: string): FieldSnapshot {
  const sidecarPath = join(dir, baseName + ".json");
  if (!existsSync(sidecarPath)) throw new MissingArtifact(baseName + ".json");
  const sidecar = JSON.parse(readFileSync(sidecarPath, "utf8")) as {
    schema_version: number;
    kind: string;
    grid: { dim: number; lower: number[]; extent: number[]; npts: number[]; stagger: number[] };
    paxes?: string[][];
    eps: number;
    time: number;
    potential_hash: string;
  };
  if (sidecar.schema_version !== SCHEMA_VERSION) {
    throw new SchemaVersionMismatch(baseName + ".json", sidecar.schema_version, SCHEMA_VERSION);
  }
  // phase-space fields live on the tensor (x, p) grid: the sidecar's grid
  // holds the x-axes; the momentum axes are listed separately
  const shape = sidecar.paxes
    ? [...sidecar.grid.npts, ...sidecar.paxes.map((ax) => ax.length)]
    : sidecar.grid.npts;
  const binPath = join(dir, baseName + ".bin");
  if (!existsSync(binPath)) throw new MissingArtifact(baseName + ".bin");
  const raw = readFileSync(binPath);
  const all = new Float64Array(raw.buffer, raw.byteOffset, raw.byteLength / 8);
  const n = all.length / 2;
  const re = new Float64Array(n);
  const im = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    re[i] = all[2 * i];
    im[i] = all[2 * i + 1];
  }
  return {
    kind: sidecar.kind,
    eps: sidecar.eps,
    time: sidecar.time,
    shape,
    axes: { lower: sidecar.grid.lower, extent: sidecar.grid.extent, stagger: sidecar.grid.stagger },
    re,
    im,
    potentialHash: sidecar.potential_hash,
    baseName,
  };
}

/** Field exports present in a run directory (any <name>.bin with sidecar). */
export function listFields(dir: string): string[] {
  return readdirSync(dir)
    .filter((f) => f.endsWith(".bin") && existsSync(join(dir, f.replace(/\.bin$/, ".json"))))
    .map((f) => f.replace(/\.bin$/, ""))
    .sort();
}
