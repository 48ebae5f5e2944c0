"""Numerical verification of the a priori estimates.

Everything the limit argument leans on is measured here at desk scale:
the sup-in-time bound on ||U_s Psi||^2, the O(delta^2) no-concentration
ladder at Coulomb singularities, propagation of tightness with explicit
cutoff constants, the kinetic bound, and the repulsive-commutator sign
Re<-Delta psi, U_s psi> >= 0.

Constants entering pass/fail checks are measured at t = 0 and propagated,
never asserted from theory (the proofs' constants are non-explicit).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import potential as pot
from . import quantum as qm
from .errors import DeltaBelowResolution
from .wigner import smoothstep7

# cutoff profile chi(r): 0 for r <= 1/2, 1 for r >= 1, order-7 smoothstep
# between; constants below are exact for this polynomial.
GRAD_CHI_MAX = 2.0 * 140.0 / 64.0                      # sup |chi'|
D2_CHI_MAX = 4.0 * 420.0 / (25.0 * math.sqrt(5.0))     # sup |chi''|


def chi_profile(r):
    return smoothstep7(2.0 * (np.asarray(r, dtype=float) - 0.5))


def lap_chi_bound(dim):
    """sup |Delta chi| <= sup|chi''| + (d-1) sup|chi'/r| (chi' lives on r >= 1/2)."""
    return D2_CHI_MAX + (dim - 1) * 2.0 * GRAD_CHI_MAX


# ---------------------------------------------------------------------------
# pointwise quadratures
# ---------------------------------------------------------------------------

def singular_l2(wf, spec):
    """||U_s Psi||^2 by grid quadrature (staggered grid: no node on S)."""
    us = pot.eval_Us(spec, wf.grid.points())
    return float(np.sum(us**2 * qm.position_density(wf)) * wf.grid.cell_volume)


def singular_l2_indicator(wf, spec, flag_rel=0.10):
    """Value plus a grid-convergence indicator (2x-coarsened recomputation)."""
    value = singular_l2(wf, spec)
    coarse = singular_l2(qm.coarsened(wf), spec)
    rel = abs(value - coarse) / max(abs(value), 1e-300)
    return {"value": value, "coarse_value": coarse, "rel_diff": rel,
            "flagged": bool(rel > flag_rel)}


def mass_near_singular(obj, spec, delta):
    """Mass of |Psi|^2 (or ensemble weight) within distance delta of S."""
    if hasattr(obj, "grid"):  # wavefunction
        hmax = max(obj.grid.h)
        if delta <= 2.0 * hmax:
            raise DeltaBelowResolution(
                f"delta = {delta:g} not resolvable (2h = {2 * hmax:g})"
            )
        d = pot.dist_to_singular(spec, obj.grid.points())
        return float(
            np.sum(qm.position_density(obj)[d < delta]) * obj.grid.cell_volume
        )
    d = pot.dist_to_singular(spec, obj.x)
    return float(np.sum(obj.w[np.asarray(d) < delta]))


def grad_l1_bound(wf, spec):
    """Majorant C0 * ||U_s Psi||^2 >= int max_a |grad_{R_a} U_s| |Psi|^2.

    C0 = 1/min{c_ab != 0}: per nucleus block the Coulomb-pair identity
    |grad_{R_a}(1/|R_a - R_b|)| = 1/|R_a - R_b|^2 gives
    max_a |grad_{R_a} U_s| <= C0 U_s^2 pointwise.
    """
    return spec.c0() * singular_l2(wf, spec)


def grad_l1_direct(wf, spec, guard_factor=2.0):
    """Direct quadrature of max_a |grad_{R_a} U_s| |Psi|^2 outside the guard."""
    pts = wf.grid.points()
    d = pot.dist_to_singular(spec, pts)
    mask = d > guard_factor * spec.guard_radius
    if not spec.active_pairs():
        return 0.0
    g = pot.grad_s_block_max(spec, pts[mask])
    dens = qm.position_density(wf)[mask]
    return float(np.sum(g * dens) * wf.grid.cell_volume)


def commutator_positivity(wf, spec):
    """Re<-Delta psi, U_s psi> (unscaled Laplacian, spectral)."""
    g = wf.grid
    lap = np.fft.ifftn(g.ksq_mesh() * np.fft.fftn(wf.values))  # -Delta psi
    us = pot.eval_Us(spec, g.points())
    inner = np.sum(np.conj(lap) * us * wf.values) * g.cell_volume
    return float(inner.real)


def commutator_scale(wf, spec):
    """||Delta psi|| * ||U_s psi||: the natural size against which the
    positivity tolerance is measured."""
    g = wf.grid
    lap = np.fft.ifftn(g.ksq_mesh() * np.fft.fftn(wf.values))
    us = pot.eval_Us(spec, g.points())
    a = np.sqrt(np.sum(np.abs(lap) ** 2) * g.cell_volume)
    b = np.sqrt(np.sum(np.abs(us * wf.values) ** 2) * g.cell_volume)
    return float(a * b)


# ---------------------------------------------------------------------------
# tightness
# ---------------------------------------------------------------------------

def _radial_distance(grid, center=None):
    if center is None:
        center = [lo + L / 2.0 for lo, L in zip(grid.lower, grid.extent)]
    pts = grid.points()
    return np.sqrt(np.sum((pts - np.asarray(center)) ** 2, axis=-1))


def tightness_profile(wf, r_ladder, center=None):
    """Tail masses int_{|x| > R} |Psi|^2 for each R (center defaults to box center)."""
    r = _radial_distance(wf.grid, center)
    dens = qm.position_density(wf) * wf.grid.cell_volume
    return np.array([float(np.sum(dens[r > R])) for R in r_ladder])


def tightness_check(snapshots, r_ladder, center=None, slack=1e-12):
    """Propagation-of-tightness inequality with explicit cutoff constants.

    For every snapshot t and ladder radius R:

        tail_t(R) <= tail_0(R/2)
                     + (t - t0) * [ eps/2 * C_lap / R^2 + C_grad / R * K ],

    where C_grad = sup|chi'|, C_lap bounds sup|Delta chi| for the shipped
    cutoff profile, and K = sup_t ||eps grad Psi|| ||Psi|| is measured over
    the run.
    """
    eps = snapshots[0].eps
    dim = snapshots[0].grid.dim
    t0 = snapshots[0].time
    K = max(
        math.sqrt(2.0 * qm.kinetic_energy(s)) * qm.norm(s) for s in snapshots
    )
    tail0_half = tightness_profile(snapshots[0], [R / 2.0 for R in r_ladder], center)
    rows = []
    ok = True
    for s in snapshots:
        tails = tightness_profile(s, r_ladder, center)
        for j, R in enumerate(r_ladder):
            const = 0.5 * eps * lap_chi_bound(dim) / R**2 + GRAD_CHI_MAX / R * K
            bound = tail0_half[j] + abs(s.time - t0) * const
            passed = tails[j] <= bound + slack
            ok = ok and passed
            rows.append(
                {
                    "t": s.time,
                    "R": R,
                    "tail": tails[j],
                    "bound": float(bound),
                    "passed": bool(passed),
                }
            )
    return {"passed": bool(ok), "K": K, "grad_chi_max": GRAD_CHI_MAX,
            "lap_chi_bound": lap_chi_bound(dim), "rows": rows}


def kinetic_bound_check(snapshots, spec, tol=1e-6):
    """kinetic(t) <= energy(0) + sup_box |U_b| at every snapshot (U_s >= 0)."""
    e0 = qm.energy(snapshots[0], spec)
    ub = pot.eval_Ub(spec, snapshots[0].grid.points())
    ub_sup = float(np.max(np.abs(ub)))
    rows = []
    ok = True
    for s in snapshots:
        kin = qm.kinetic_energy(s)
        bound = e0 + ub_sup + tol * max(1.0, abs(e0))
        passed = kin <= bound
        ok = ok and passed
        rows.append({"t": s.time, "kinetic": kin, "bound": bound, "passed": bool(passed)})
    return {"passed": bool(ok), "energy0": e0, "ub_sup": ub_sup, "rows": rows}


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def loglog_slope(xs, ys):
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    sol, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(sol[0]), float(sol[1])


def _trend_slope(times, values):
    """OLS slope with its standard error (noise-aware drift test)."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    A = np.vstack([t, np.ones_like(t)]).T
    sol, *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = v - A @ sol
    dof = max(len(t) - 2, 1)
    s2 = float(resid @ resid) / dof
    tt = float(np.sum((t - t.mean()) ** 2))
    se = math.sqrt(s2 / tt) if tt > 0 else float("inf")
    return float(sol[0]), se


@dataclass
class EstimateReport:
    """Per-run record of every measured estimate with pass/fail flags."""

    run_id: str
    times: list
    norms: list
    energies: list
    kinetics: list
    singular_l2s: list
    delta_ladder: list
    mass_ladders: list  # per time: list over delta
    r_ladder: list
    tail_ladders: list  # per time: list over R
    fitted: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "run_id": self.run_id,
            "times": self.times,
            "norms": self.norms,
            "energies": self.energies,
            "kinetics": self.kinetics,
            "singular_l2s": self.singular_l2s,
            "delta_ladder": self.delta_ladder,
            "mass_ladders": self.mass_ladders,
            "r_ladder": self.r_ladder,
            "tail_ladders": self.tail_ladders,
            "fitted": self.fitted,
            "checks": self.checks,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def build_report(
    run_id,
    snapshots,
    spec,
    delta_ladder=(),
    r_ladder=(),
    center=None,
    sup_ratio_limit=10.0,
    noconc_slope_min=1.5,
):
    """Measure every estimate on a quantum run and flag the outcomes.

    The no-concentration ladder is evaluated at the closest-approach
    snapshot (max ||U_s Psi||^2); its acceptance threshold is a fitted
    log-log slope >= 1.5 -- the O(delta^2) statement is asymptotic and the
    grid imposes delta > 2h, so the raw ladder is always emitted and the
    trend toward 2 is left visible.
    """
    times = [s.time for s in snapshots]
    norms = [qm.norm(s) for s in snapshots]
    energies = [qm.energy(s, spec) for s in snapshots]
    kinetics = [qm.kinetic_energy(s) for s in snapshots]
    has_sing = bool(spec.active_pairs())
    sing = [singular_l2(s, spec) if has_sing else 0.0 for s in snapshots]
    mass_ladders = []
    tail_ladders = []
    for s in snapshots:
        if delta_ladder and has_sing:
            mass_ladders.append(
                [mass_near_singular(s, spec, dl) for dl in delta_ladder]
            )
        if r_ladder:
            tail_ladders.append(list(tightness_profile(s, r_ladder, center)))
    fitted = {}
    checks = {}
    if has_sing:
        base = sing[0] if sing[0] > 0 else 1.0
        ratio = max(sing) / base
        slope, se = _trend_slope(times, sing)
        # one-sided: no *increasing* trend beyond the series' own noise
        drift_ok = slope <= max(3.0 * se, 0.05 * max(sing) / max(times[-1] - times[0], 1e-12))
        checks["singular_l2_sup"] = {
            "sup_ratio": ratio,
            "limit": sup_ratio_limit,
            "trend_slope": slope,
            "trend_se": se,
            "passed": bool(ratio <= sup_ratio_limit and drift_ok),
        }
        fitted["singular_l2_indicator"] = singular_l2_indicator(
            snapshots[int(np.argmax(sing))], spec
        )
    if delta_ladder and has_sing and mass_ladders:
        peak = int(np.argmax(sing))
        ladder = np.array(mass_ladders[peak])
        usable = ladder > 0
        if np.count_nonzero(usable) >= 2:
            slope, intercept = loglog_slope(
                np.array(delta_ladder)[usable], ladder[usable]
            )
        else:
            slope, intercept = float("nan"), float("nan")
        fitted["noconcentration"] = {
            "snapshot_index": peak,
            "deltas": list(delta_ladder),
            "masses": [float(v) for v in ladder],
            "slope": slope,
            "intercept": intercept,
        }
        checks["noconcentration"] = {
            "slope": slope,
            "min_slope": noconc_slope_min,
            "passed": bool(slope >= noconc_slope_min),
        }
    if r_ladder:
        checks["tightness"] = tightness_check(snapshots, r_ladder, center)
    checks["kinetic_bound"] = kinetic_bound_check(snapshots, spec)
    drift = max(abs(n - norms[0]) for n in norms)
    checks["unitarity"] = {"max_norm_drift": drift, "passed": bool(drift <= 1e-8)}
    return EstimateReport(
        run_id=run_id,
        times=times,
        norms=norms,
        energies=energies,
        kinetics=kinetics,
        singular_l2s=sing,
        delta_ladder=list(delta_ladder),
        mass_ladders=mass_ladders,
        r_ladder=list(r_ladder),
        tail_ladders=tail_ladders,
        fitted=fitted,
        checks=checks,
    )
