"""Limiting classical dynamics: weighted particles transported by (MD).

The integrator is velocity Verlet with a per-particle adaptive substep

    dt_i = min(dt, eta * r_i / |p_i|, eta * sqrt(r_i^3 / c_max)),

where r_i is the distance to the singular set: the Coulomb force scale
(|grad U_s| ~ c/r^2) bounds the per-substep impulse through close
approaches without softening the potential.  A particle entering the
guard radius is an abort-and-record event (the theorem's limit measure
never charges the singular set; individual numerical trajectories can).

The substep loop is the package's hot kernel: a compiled extension is
used when available, with a pure-Python fallback selected at import
(``BACKEND`` records the choice; ``benchmarks/bench_verlet.py`` compares
the two).
"""

from collections import namedtuple
from dataclasses import dataclass, replace

import numpy as np

from . import potential as pot
from .errors import SingularApproach, SupportViolation

try:  # pragma: no cover - build-environment dependent
    from . import _verlet as _kernel
except ImportError:  # pragma: no cover
    from . import _verlet_py as _kernel

BACKEND = _kernel.BACKEND

Particle = namedtuple("Particle", ["x", "p", "w"])

_SMOOTH_CODE = {
    "zero": 0,
    "harmonic": 1,
    "quartic": 2,
    "soft_coulomb": 3,
    "crossing_cone": 4,
    "dimer_radial": 5,
}
_LAYOUT_CODE = {pot.FLAT: 0, pot.NUCLEAR: 1, pot.RELATIVE: 2}


@dataclass(frozen=True)
class Ensemble:
    """Weighted particle set (struct-of-arrays) at one time."""

    x: np.ndarray
    p: np.ndarray
    w: np.ndarray
    time: float = 0.0
    dropped_weight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_2d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "p", np.atleast_2d(np.asarray(self.p, dtype=float)))
        object.__setattr__(self, "w", np.atleast_1d(np.asarray(self.w, dtype=float)))
        if self.x.shape != self.p.shape or self.x.shape[0] != self.w.shape[0]:
            raise ValueError("inconsistent ensemble shapes")
        if np.any(self.w < 0):
            raise ValueError("weights must be nonnegative")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.p))):
            raise ValueError("particle coordinates must be finite")

    def __len__(self):
        return self.x.shape[0]

    @property
    def dim(self):
        return self.x.shape[1]

    @property
    def total_weight(self):
        return float(np.sum(self.w))

    def particles(self):
        return [Particle(self.x[i].copy(), self.p[i].copy(), float(self.w[i]))
                for i in range(len(self))]


def _encode_spec(spec):
    d = spec.dim
    smooth = spec.smooth
    code = _SMOOTH_CODE[smooth.kind]
    if smooth.kind == "harmonic":
        k = np.asarray(smooth.k, dtype=float)
        sparams = np.broadcast_to(k, (d,)).astype(float).copy() if k.ndim else np.full(d, float(k))
    elif smooth.kind == "quartic":
        sparams = np.array([smooth.a])
    elif smooth.kind == "soft_coulomb":
        sparams = np.array([smooth.c, smooth.a])
    elif smooth.kind == "crossing_cone":
        sparams = np.array([smooth.c])
    elif smooth.kind == "dimer_radial":
        sparams = np.array([smooth.d_e, smooth.a, smooth.r_e])
    else:
        sparams = np.zeros(1)
    if spec.pairs:
        pair_idx = np.array([[p.alpha, p.beta] for p in spec.pairs], dtype=np.int64)
        pair_c = np.array([p.c for p in spec.pairs], dtype=float)
    else:
        pair_idx = np.zeros((0, 2), dtype=np.int64)
        pair_c = np.zeros(0)
    cmax = float(pair_c.max()) if pair_c.size else 0.0
    return (_LAYOUT_CODE[spec.layout], code, sparams, pair_idx, pair_c, cmax)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def _packet_covariance(packet, eps, mode):
    pos_var = np.array([s**2 for s in packet.position_spread(eps)])
    mom_var = np.array([s**2 for s in packet.momentum_spread(eps)])
    if mode.startswith("husimi"):
        pos_var = pos_var + eps / 2.0
        mom_var = mom_var + eps / 2.0
    return pos_var, mom_var


def sample_initial(packet, mode="delta", n=1, seed=0, eps=None):
    """Phase-space initial data for the limiting transport.

    Modes
    -----
    ``delta``
        The limit object for the packet family: one particle at (x0, p0),
        weight 1.
    ``wigner`` / ``husimi``
        Gaussian cloud with the packet's Wigner (resp. Husimi = Wigner +
        eps/2 smoothing) covariance at the given ``eps``; ``n`` i.i.d.
        samples, deterministic for a given ``seed``.
    ``wigner-gh`` / ``husimi-gh``
        Same covariance, but deterministic tensor Gauss-Hermite nodes with
        ``n`` nodes per phase-space axis (n^(2d) weighted particles); no
        sampling noise.
    """
    d = packet.dim
    x0 = np.array(packet.x0)
    p0 = np.array(packet.p0)
    if mode == "delta":
        return Ensemble(x0[None, :], p0[None, :], np.array([1.0]), 0.0)
    if eps is None:
        raise ValueError(f"mode {mode!r} requires eps")
    pos_var, mom_var = _packet_covariance(packet, eps, mode)
    if mode.endswith("-gh"):
        nodes, wts = np.polynomial.hermite_e.hermegauss(int(n))
        wts = wts / wts.sum()
        axes_nodes = [nodes * np.sqrt(v) for v in pos_var] + [
            nodes * np.sqrt(v) for v in mom_var
        ]
        mesh = np.meshgrid(*axes_nodes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        wmesh = np.meshgrid(*([wts] * (2 * d)), indexing="ij")
        w = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
        x = pts[:, :d] + x0[None, :]
        p = pts[:, d:] + p0[None, :]
        return Ensemble(x, p, w, 0.0)
    if mode in ("wigner", "husimi"):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(n, d)) * np.sqrt(pos_var)[None, :] + x0[None, :]
        p = rng.normal(size=(n, d)) * np.sqrt(mom_var)[None, :] + p0[None, :]
        return Ensemble(x, p, np.full(n, 1.0 / n), 0.0)
    raise ValueError(f"unknown sampling mode {mode!r}")


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------

def step(ensemble, spec, dt, eta=0.05, on_singular="raise"):
    """One nominal step of size ``dt`` (adaptive substeps internally)."""
    return push_forward(ensemble, spec, dt, dt, eta=eta, on_singular=on_singular)


def push_forward(ensemble, spec, T, dt, eta=0.05, on_singular="raise"):
    """Transport the ensemble by time ``T`` using nominal step ``dt``.

    Weights are untouched (mass preservation); with
    ``on_singular="drop"`` aborted particles are removed and their weight
    accumulated in ``dropped_weight`` instead of raising.
    """
    if ensemble.dim != spec.dim:
        raise ValueError("ensemble dimension does not match potential")
    if T == 0.0:
        return ensemble
    x = ensemble.x.copy()
    p = ensemble.p.copy()
    status = np.zeros(len(ensemble), dtype=np.int64)
    layout, code, sparams, pair_idx, pair_c, cmax = _encode_spec(spec)
    nfail = _kernel.advance(
        x, p, status, float(T), float(dt), float(eta), float(spec.guard_radius),
        layout, code, sparams, pair_idx, pair_c, cmax,
    )
    new_time = ensemble.time + T
    if nfail:
        bad = np.nonzero(status != 0)[0]
        if on_singular == "raise":
            i = int(bad[0])
            raise SingularApproach(i, x[i].copy(), new_time)
        keep = status == 0
        dropped = ensemble.dropped_weight + float(np.sum(ensemble.w[~keep]))
        return Ensemble(x[keep], p[keep], ensemble.w[keep], new_time, dropped)
    return replace(ensemble, x=x, p=p, time=new_time)


def trajectory(ensemble, spec, times, dt, eta=0.05, on_singular="raise"):
    """Snapshots at the given (increasing) times; times[0] may equal now."""
    times = list(times)
    snaps = []
    current = ensemble
    for t in times:
        span = t - current.time
        if span < -1e-12:
            raise ValueError("snapshot times must be nondecreasing")
        if span > 1e-15:
            current = push_forward(current, spec, span, dt, eta, on_singular)
        snaps.append(current)
    return snaps


# ---------------------------------------------------------------------------
# measures and the weak Liouville residual
# ---------------------------------------------------------------------------

def measure_pair(ensemble, phi):
    """int phi dW for the empirical measure: sum_i w_i phi(x_i, p_i)."""
    return float(np.sum(ensemble.w * phi.value(ensemble.x, ensemble.p)))


def kinetic(ensemble):
    return 0.5 * np.sum(ensemble.p**2, axis=1)


def particle_energy(ensemble, spec):
    """|p|^2/2 + U(x) per particle."""
    return kinetic(ensemble) + pot.eval_U(spec, ensemble.x)


def liouville_residual(snapshots, spec, phi):
    """|int (d_t + p.grad_x - grad U.grad_p)(theta phi) dW dt| over snapshots.

    ``phi`` must carry a temporal window compactly inside the snapshot
    range, and its spatial support must stay clear of the singular set and
    of non-C^1 points of the smooth surface.
    """
    if phi.window is None:
        raise SupportViolation("probe needs a temporal window")
    times = np.array([s.time for s in snapshots])
    t0, t1 = phi.window
    if not (times[0] <= t0 and t1 <= times[-1]):
        raise SupportViolation("temporal window not contained in the trajectory range")
    center = np.array(phi.center_x)
    r = phi.support_radius_x()
    if pot.dist_to_singular(spec, center) <= 2.0 * r:
        raise SupportViolation("probe support reaches the singular set")
    if pot.dist_to_nonsmooth(spec, center) <= 2.0 * r:
        raise SupportViolation("probe support reaches a non-C^1 point")
    vals = np.empty(len(snapshots))
    for k, snap in enumerate(snapshots):
        theta = float(phi.profile(snap.time))
        theta_dot = float(phi.profile_deriv(snap.time))
        base = phi.value(snap.x, snap.p)
        gx = phi.grad_x(snap.x, snap.p)
        gp = phi.grad_p(snap.x, snap.p)
        transport = np.sum(snap.p * gx, axis=1)
        if theta != 0.0:
            force = pot.eval_gradU(spec, snap.x)
            drift = np.sum(force * gp, axis=1)
        else:
            drift = 0.0
        integrand = theta_dot * base + theta * (transport - drift)
        vals[k] = np.sum(snap.w * integrand)
    return abs(float(np.trapezoid(vals, times)))
