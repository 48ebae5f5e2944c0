/** Small deterministic SVG plotting kit (no DOM, no dependencies).
 *
 * Figures are assembled from fixed-precision primitives so identical
 * inputs produce byte-identical files.
 */

export function fmt(x: number): string {
  if (!isFinite(x)) return "0";
  const s = x.toPrecision(6);
  return s.includes(".") || s.includes("e") ? s.replace(/\.?0+($|e)/, "$1") : s;
}

export type ScaleKind = "linear" | "log";

export class Scale {
  constructor(
    readonly kind: ScaleKind,
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  map(v: number): number {
    const [a, b] =
      this.kind === "log" ? [Math.log(this.d0), Math.log(this.d1)] : [this.d0, this.d1];
    const x = this.kind === "log" ? Math.log(v) : v;
    const t = b === a ? 0.5 : (x - a) / (b - a);
    return this.r0 + t * (this.r1 - this.r0);
  }

  ticks(n = 5): number[] {
    if (this.kind === "log") {
      const lo = Math.ceil(Math.log10(this.d0) - 1e-9);
      const hi = Math.floor(Math.log10(this.d1) + 1e-9);
      const out: number[] = [];
      for (let e = lo; e <= hi; e++) out.push(Math.pow(10, e));
      if (out.length === 0) out.push(this.d0, this.d1);
      return out;
    }
    const span = this.d1 - this.d0;
    if (span <= 0) return [this.d0];
    const step = Math.pow(10, Math.floor(Math.log10(span / n)));
    const mult = [1, 2, 5, 10].find((m) => span / (step * m) <= n + 1) ?? 10;
    const s = step * mult;
    const start = Math.ceil(this.d0 / s) * s;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-12 * span; v += s) out.push(v);
    return out;
  }
}

export function padDomain(lo: number, hi: number, kind: ScaleKind): [number, number] {
  if (kind === "log") {
    const safeLo = lo > 0 ? lo : 1e-18;
    return [safeLo / 1.5, hi * 1.5];
  }
  const span = hi - lo || Math.abs(hi) || 1;
  return [lo - 0.06 * span, hi + 0.06 * span];
}

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2",
];

export interface Series {
  xs: number[];
  ys: number[];
  label: string;
  color?: string;
  dashed?: boolean;
  markers?: boolean;
  line?: boolean;
}

export interface AxesSpec {
  width?: number;
  height?: number;
  xKind?: ScaleKind;
  yKind?: ScaleKind;
  xLabel: string;
  yLabel: string;
  title: string;
  caption: string;
}

export function renderChart(series: Series[], spec: AxesSpec): string {
  const W = spec.width ?? 720;
  const H = spec.height ?? 480;
  const m = { l: 72, r: 170, t: 44, b: 64 };
  const xKind = spec.xKind ?? "linear";
  const yKind = spec.yKind ?? "linear";
  const xsAll = series.flatMap((s) => s.xs);
  const ysAll = series.flatMap((s) => s.ys).filter((y) => (yKind === "log" ? y > 0 : true));
  const [x0, x1] = padDomain(Math.min(...xsAll), Math.max(...xsAll), xKind);
  const [y0, y1] = padDomain(Math.min(...ysAll), Math.max(...ysAll), yKind);
  const sx = new Scale(xKind, x0, x1, m.l, W - m.r);
  const sy = new Scale(yKind, y0, y1, H - m.b, m.t);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica,Arial,sans-serif">`,
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(`<text x="${m.l}" y="24" font-size="15" font-weight="bold">${spec.title}</text>`);
  // frame
  parts.push(
    `<rect x="${m.l}" y="${m.t}" width="${W - m.l - m.r}" height="${H - m.t - m.b}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  for (const v of sx.ticks()) {
    const px = fmt(sx.map(v));
    parts.push(`<line x1="${px}" y1="${H - m.b}" x2="${px}" y2="${H - m.b + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${px}" y="${H - m.b + 18}" font-size="11" text-anchor="middle">${fmt(v)}</text>`,
    );
    parts.push(
      `<line x1="${px}" y1="${m.t}" x2="${px}" y2="${H - m.b}" stroke="#ddd" stroke-width="0.5"/>`,
    );
  }
  for (const v of sy.ticks()) {
    const py = fmt(sy.map(v));
    parts.push(`<line x1="${m.l - 5}" y1="${py}" x2="${m.l}" y2="${py}" stroke="#333"/>`);
    parts.push(
      `<text x="${m.l - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle">${fmt(v)}</text>`,
    );
    parts.push(
      `<line x1="${m.l}" y1="${py}" x2="${W - m.r}" y2="${py}" stroke="#ddd" stroke-width="0.5"/>`,
    );
  }
  parts.push(
    `<text x="${(m.l + W - m.r) / 2}" y="${H - 20}" font-size="13" text-anchor="middle">${spec.xLabel}</text>`,
  );
  parts.push(
    `<text x="20" y="${(m.t + H - m.b) / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 20 ${(m.t + H - m.b) / 2})">${spec.yLabel}</text>`,
  );
  series.forEach((s, i) => {
    const color = s.color ?? PALETTE[i % PALETTE.length];
    const pts = s.xs
      .map((x, j) => [x, s.ys[j]] as const)
      .filter(([, y]) => (yKind === "log" ? y > 0 : true));
    if (s.line !== false && pts.length > 1) {
      const d = pts.map(([x, y]) => `${fmt(sx.map(x))},${fmt(sy.map(y))}`).join(" ");
      const dash = s.dashed ? ` stroke-dasharray="6 4"` : "";
      parts.push(
        `<polyline points="${d}" fill="none" stroke="${color}" stroke-width="1.6"${dash}/>`,
      );
    }
    if (s.markers !== false) {
      for (const [x, y] of pts) {
        parts.push(
          `<circle cx="${fmt(sx.map(x))}" cy="${fmt(sy.map(y))}" r="3" fill="${color}"/>`,
        );
      }
    }
    const ly = m.t + 16 * i + 10;
    parts.push(
      `<line x1="${W - m.r + 10}" y1="${ly}" x2="${W - m.r + 30}" y2="${ly}" stroke="${color}" stroke-width="2"${s.dashed ? ` stroke-dasharray="6 4"` : ""}/>`,
    );
    parts.push(`<text x="${W - m.r + 36}" y="${ly + 4}" font-size="11">${s.label}</text>`);
  });
  parts.push(
    `<text x="${m.l}" y="${H - 4}" font-size="9" fill="#666">${spec.caption}</text>`,
  );
  parts.push("</svg>");
  return parts.join("\n");
}
