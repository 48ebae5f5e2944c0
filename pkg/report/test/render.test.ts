import { existsSync, mkdtempSync, readFileSync, readdirSync, rmSync, statSync } from "fs";
import { tmpdir } from "os";
import { dirname, join } from "path";
import { fileURLToPath } from "url";

import { afterAll, describe, expect, it } from "vitest";

import { loadRun, listFields, loadField } from "../src/artifacts.js";
import { MissingArtifact } from "../src/errors.js";
import {
  FIGURE_KINDS,
  persistedFinalSlope,
  recomputedFinalSlope,
  render,
  renderAll,
  zeroContours,
} from "../src/figures.js";
import { parseCsv, numericColumn } from "../src/csv.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const RUN_DIR = join(HERE, "..", "fixtures", "quartic-run");
const tmp = mkdtempSync(join(tmpdir(), "qcmd-report-"));

afterAll(() => rmSync(tmp, { recursive: true, force: true }));

describe("run directory fixture", () => {
  it("loads manifest and results", () => {
    const run = loadRun(RUN_DIR);
    expect(run.configHash.length).toBeGreaterThan(16);
    expect(run.results.cells.length).toBe(4);
  });

  it("contains a 2D field export", () => {
    const fields = listFields(RUN_DIR);
    expect(fields.length).toBeGreaterThan(0);
    const f = loadField(RUN_DIR, fields[0]);
    expect(f.shape.length).toBe(2);
  });
});

describe("render", () => {
  it("renders every figure kind to nonempty files", () => {
    const written = renderAll(RUN_DIR, tmp);
    expect(written.length).toBeGreaterThanOrEqual(FIGURE_KINDS.length);
    for (const f of written) {
      expect(existsSync(f)).toBe(true);
      expect(statSync(f).size).toBeGreaterThan(200);
    }
  });

  it("recomputed D(eps) slope matches the persisted rate fit to 1e-9", () => {
    const run = loadRun(RUN_DIR);
    const recomputed = recomputedFinalSlope(run);
    const persisted = persistedFinalSlope(run);
    expect(persisted).toBeDefined();
    expect(Math.abs(recomputed - (persisted as number))).toBeLessThanOrEqual(1e-9);
  });

  it("is deterministic", () => {
    const a = render({ runDir: RUN_DIR, kind: "convergence", outDir: join(tmp, "a") });
    const b = render({ runDir: RUN_DIR, kind: "convergence", outDir: join(tmp, "b") });
    expect(readFileSync(a[0], "utf8")).toBe(readFileSync(b[0], "utf8"));
  });

  it("renders heatmap PNG with a PNG signature", () => {
    const written = render({
      runDir: RUN_DIR,
      kind: "heatmap",
      outDir: join(tmp, "png"),
      format: "png",
    });
    const buf = readFileSync(written[0]);
    expect([...buf.subarray(0, 4)]).toEqual([0x89, 0x50, 0x4e, 0x47]);
  });

  it("heatmap SVG surfaces the negative-region annotation", () => {
    const written = render({
      runDir: RUN_DIR,
      kind: "heatmap",
      outDir: join(tmp, "svg"),
    });
    const svg = readFileSync(written[0], "utf8");
    expect(svg).toContain("negative cells");
    expect(svg).toContain("zero level contoured");
  });

  it("raises MissingArtifact with the file name", () => {
    expect(() => render({ runDir: tmp, kind: "convergence" })).toThrowError(
      MissingArtifact,
    );
    try {
      render({ runDir: tmp, kind: "convergence" });
    } catch (err) {
      expect((err as MissingArtifact).file).toBe("manifest.json");
    }
  });

  it("never mutates the run directory", () => {
    const files0 = readdirSync(RUN_DIR).sort();
    renderAll(RUN_DIR, tmp);
    expect(readdirSync(RUN_DIR).sort()).toEqual(files0);
  });
});

describe("pieces", () => {
  it("csv parser roundtrips the distances table", () => {
    const t = parseCsv(readFileSync(join(RUN_DIR, "distances.csv"), "utf8"));
    expect(t.header).toEqual(["eps", "t", "weak_distance"]);
    const d = numericColumn(t, "weak_distance");
    expect(d.every((v) => isFinite(v) && v >= 0)).toBe(true);
  });

  it("zero contour finds the sign change of a saddle", () => {
    const nx = 8;
    const ny = 8;
    const vals = new Float64Array(nx * ny);
    for (let i = 0; i < nx; i++)
      for (let j = 0; j < ny; j++) vals[i * ny + j] = i - 3.5; // sign change between i=3,4
    const segs = zeroContours(vals, nx, ny);
    expect(segs.length).toBeGreaterThan(0);
    for (const [x0] of segs) expect(Math.abs(x0 - 3.5)).toBeLessThan(0.51);
  });
});
