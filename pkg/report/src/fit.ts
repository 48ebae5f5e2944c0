/** Log-log least squares, mirroring the producer's rate fit exactly:
 * points at or below the noise floor are excluded before fitting.
 */

export const NOISE_FLOOR = 1e-9;

export interface LogLogFit {
  slope: number;
  intercept: number;
  residual: number;
  excluded: number[];
}

export function loglogFit(xs: number[], ys: number[], floor = NOISE_FLOOR): LogLogFit {
  const keep: number[] = [];
  const excluded: number[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (ys[i] > floor) keep.push(i);
    else excluded.push(xs[i]);
  }
  if (keep.length < 2) {
    throw new Error(`only ${keep.length} usable points above the noise floor`);
  }
  const lx = keep.map((i) => Math.log(xs[i]));
  const ly = keep.map((i) => Math.log(ys[i]));
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let rss = 0;
  for (let i = 0; i < n; i++) {
    const r = ly[i] - (slope * lx[i] + intercept);
    rss += r * r;
  }
  return { slope, intercept, residual: Math.sqrt(rss / n), excluded };
}
