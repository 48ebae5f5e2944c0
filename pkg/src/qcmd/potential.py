"""Potential family U = U_b + U_s.

``U_b`` is a smooth bounded-below surrogate surface (the electronic surface
itself is out of scope; only its regularity matters) and ``U_s`` is the
exact repulsive Coulomb pair sum ``sum c_ab / |R_a - R_b|`` with nonnegative
couplings.  Three coordinate layouts are supported:

* ``flat``     -- x in R^d, no pair terms;
* ``nuclear``  -- x = (R_1, ..., R_M) in R^{3M}, pair terms between nuclei;
* ``relative`` -- x in R^3 is the (orthogonally reduced) separation
  coordinate of a two-nucleus system, with a single pair term c/|x|.
  For equal masses the change of variables (R1, R2) ->
  ((R1+R2)/sqrt2, (R1-R2)/sqrt2) splits the two-nucleus Hamiltonian exactly,
  and the separation factor is this system with coupling c12/sqrt2.

All evaluation functions are pure and accept ``x`` of shape ``(d,)`` or any
``(..., d)`` batch.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonDifferentiable, SingularPoint

FLAT = "flat"
NUCLEAR = "nuclear"
RELATIVE = "relative"


# ---------------------------------------------------------------------------
# smooth surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Zero:
    kind: str = "zero"

    def value(self, x):
        return np.zeros(x.shape[:-1])

    def grad(self, x):
        return np.zeros_like(x)

    def force_poly(self, dim):
        """Per-axis polynomial coefficients of (grad U_b)_i in x_i, or None."""
        return [np.array([0.0])] * dim

    def params(self):
        return {}


@dataclass(frozen=True)
class Harmonic:
    """U_b = sum_i k_i x_i^2 / 2."""

    k: tuple
    kind: str = "harmonic"

    def _karr(self, d):
        k = np.asarray(self.k, dtype=float)
        return np.broadcast_to(k, (d,)) if k.ndim else np.full(d, float(k))

    def value(self, x):
        k = self._karr(x.shape[-1])
        return 0.5 * np.sum(k * x**2, axis=-1)

    def grad(self, x):
        return self._karr(x.shape[-1]) * x

    def force_poly(self, dim):
        k = self._karr(dim)
        return [np.array([0.0, ki]) for ki in k]

    def params(self):
        return {"k": list(np.atleast_1d(np.asarray(self.k, dtype=float)))}


@dataclass(frozen=True)
class Quartic:
    """U_b = sum_i a x_i^4 / 4."""

    a: float
    kind: str = "quartic"

    def value(self, x):
        return 0.25 * self.a * np.sum(x**4, axis=-1)

    def grad(self, x):
        return self.a * x**3

    def force_poly(self, dim):
        return [np.array([0.0, 0.0, 0.0, self.a])] * dim

    def params(self):
        return {"a": self.a}


@dataclass(frozen=True)
class SoftCoulomb:
    """U_b = c / sqrt(|x|^2 + a^2), smooth for a > 0 (either sign of c)."""

    c: float
    a: float
    kind: str = "soft_coulomb"

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("soft-core parameter a must be positive")

    def value(self, x):
        return self.c / np.sqrt(np.sum(x**2, axis=-1) + self.a**2)

    def grad(self, x):
        denom = (np.sum(x**2, axis=-1) + self.a**2) ** 1.5
        return -self.c * x / denom[..., None]

    def force_poly(self, dim):
        return None

    def params(self):
        return {"c": self.c, "a": self.a}


@dataclass(frozen=True)
class CrossingCone:
    """U_b = -c |x|: Lipschitz, C^1 exactly away from the apex at 0.

    Surrogate for an eigenvalue crossing (two-level model with ground
    eigenvalue -|rho|); runs straddling the apex are outside theorem scope.
    """

    c: float
    kind: str = "crossing_cone"

    def value(self, x):
        return -self.c * np.sqrt(np.sum(x**2, axis=-1))

    def grad(self, x, apex_guard=1e-12):
        r = np.sqrt(np.sum(x**2, axis=-1))
        if np.any(r <= apex_guard):
            raise NonDifferentiable("crossing-cone gradient requested at the apex")
        return -self.c * x / r[..., None]

    def force_poly(self, dim):
        return None  # piecewise; handled by callers that know the side

    def params(self):
        return {"c": self.c}


@dataclass(frozen=True)
class DimerRadial:
    """Morse-profile radial surface u(r) = d_e (1 - exp(-a (r - r_e)))^2.

    Only meaningful for two-nucleus systems: in the nuclear layout it is
    evaluated at r = |R_1 - R_2|, in the relative layout at r = |x|.
    """

    d_e: float
    a: float
    r_e: float
    kind: str = "dimer_radial"

    def radial(self, r):
        e = np.exp(-self.a * (r - self.r_e))
        return self.d_e * (1.0 - e) ** 2

    def radial_deriv(self, r):
        e = np.exp(-self.a * (r - self.r_e))
        return 2.0 * self.d_e * self.a * (1.0 - e) * e

    def params(self):
        return {"d_e": self.d_e, "a": self.a, "r_e": self.r_e}

    def force_poly(self, dim):
        return None

    # value/grad are layout-dependent; PotentialSpec dispatches.


_SMOOTH_KINDS = {
    "zero": Zero,
    "harmonic": Harmonic,
    "quartic": Quartic,
    "soft_coulomb": SoftCoulomb,
    "crossing_cone": CrossingCone,
    "dimer_radial": DimerRadial,
}


def smooth_from_dict(d):
    kind = d.get("kind")
    if kind not in _SMOOTH_KINDS:
        raise ConfigError("potential.smooth.kind", f"unknown surface {kind!r}")
    params = {k: v for k, v in d.items() if k != "kind"}
    if kind == "harmonic" and "k" in params:
        params["k"] = tuple(np.atleast_1d(params["k"]).astype(float))
    try:
        return _SMOOTH_KINDS[kind](**params)
    except TypeError as exc:
        raise ConfigError("potential.smooth", str(exc)) from exc


# ---------------------------------------------------------------------------
# pair interactions and the full spec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairInteraction:
    """Repulsive Coulomb coupling c / |R_alpha - R_beta| with c >= 0."""

    alpha: int
    beta: int
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ConfigError("potential.pairs.c", "couplings must be >= 0 (repulsive)")
        if self.alpha == self.beta:
            raise ConfigError("potential.pairs", "alpha and beta must differ")
        if self.alpha > self.beta:
            raise ConfigError("potential.pairs", "require alpha < beta")


@dataclass(frozen=True)
class PotentialSpec:
    """U = U_b + U_s with layout metadata and a gradient guard radius."""

    dim: int
    layout: str
    smooth: object = field(default_factory=Zero)
    pairs: tuple = ()
    guard_radius: float = 1e-8

    def __post_init__(self):
        if self.layout not in (FLAT, NUCLEAR, RELATIVE):
            raise ConfigError("potential.layout", f"unknown layout {self.layout!r}")
        if self.layout == FLAT and self.pairs:
            raise ConfigError("potential.pairs", "flat layout admits no pair terms")
        if self.layout == NUCLEAR:
            if self.dim % 3 != 0 or self.dim == 0:
                raise ConfigError("potential.dim", "nuclear layout requires dim = 3M")
            M = self.dim // 3
            for p in self.pairs:
                if not (0 <= p.alpha < M and 0 <= p.beta < M):
                    raise ConfigError("potential.pairs", f"nucleus index out of range (M={M})")
        if self.layout == RELATIVE:
            if self.dim != 3:
                raise ConfigError("potential.dim", "relative layout requires dim = 3")
            if len(self.pairs) != 1:
                raise ConfigError("potential.pairs", "relative layout carries exactly one pair")
        if isinstance(self.smooth, DimerRadial) and self.layout == FLAT:
            raise ConfigError("potential.smooth", "dimer_radial needs a two-nucleus layout")
        if isinstance(self.smooth, DimerRadial) and self.layout == NUCLEAR and self.dim != 6:
            raise ConfigError("potential.smooth", "dimer_radial requires M = 2")

    @property
    def n_nuclei(self):
        if self.layout == NUCLEAR:
            return self.dim // 3
        if self.layout == RELATIVE:
            return 2
        return 0

    def active_pairs(self):
        return [p for p in self.pairs if p.c != 0.0]

    def min_coupling(self):
        """m = min{c_ab != 0}; None when no singular part is active."""
        cs = [p.c for p in self.active_pairs()]
        return min(cs) if cs else None

    def c0(self):
        """Majorant constant: the strongest per-nucleus force block obeys
        max_a |grad_{R_a} U_s| <= c0 * U_s^2 with c0 = 1/min{c_ab != 0}
        (the pair identity |grad_{R_a} (1/|R_a-R_b|)| = 1/|R_a-R_b|^2).
        """
        m = self.min_coupling()
        return 0.0 if m is None else 1.0 / m

    def to_dict(self):
        return {
            "dim": self.dim,
            "layout": self.layout,
            "smooth": {"kind": self.smooth.kind, **self.smooth.params()},
            "pairs": [[p.alpha, p.beta, p.c] for p in self.pairs],
            "guard_radius": self.guard_radius,
        }

    @classmethod
    def from_dict(cls, d):
        pairs = tuple(PairInteraction(int(a), int(b), float(c)) for a, b, c in d.get("pairs", []))
        return cls(
            dim=int(d["dim"]),
            layout=d["layout"],
            smooth=smooth_from_dict(d.get("smooth", {"kind": "zero"})),
            pairs=pairs,
            guard_radius=float(d.get("guard_radius", 1e-8)),
        )


# ---------------------------------------------------------------------------
# geometry of the singular set
# ---------------------------------------------------------------------------

def _separations(spec, x):
    """Pair separation vectors, shape (..., npairs, 3)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.dim:
        raise ValueError(f"x has dimension {x.shape[-1]}, spec wants {spec.dim}")
    if spec.layout == RELATIVE:
        return x[..., None, :]
    R = x.reshape(x.shape[:-1] + (spec.n_nuclei, 3))
    seps = [R[..., p.alpha, :] - R[..., p.beta, :] for p in spec.pairs]
    return np.stack(seps, axis=-2)


def dist_to_singular(spec, x):
    """min over active pairs of |R_alpha - R_beta| (+inf when none)."""
    x = np.asarray(x, dtype=float)
    active = [i for i, p in enumerate(spec.pairs) if p.c != 0.0]
    if spec.layout == FLAT or not active:
        return np.full(x.shape[:-1], np.inf) if x.ndim > 1 else np.inf
    seps = _separations(spec, x)[..., active, :]
    r = np.sqrt(np.sum(seps**2, axis=-1))
    out = np.min(r, axis=-1)
    return out if out.ndim else float(out)


def dist_to_nonsmooth(spec, x):
    """Distance to points where U_b fails to be C^1 (cone apex only)."""
    x = np.asarray(x, dtype=float)
    if isinstance(spec.smooth, CrossingCone):
        out = np.sqrt(np.sum(x**2, axis=-1))
        return out if out.ndim else float(out)
    return np.full(x.shape[:-1], np.inf) if x.ndim > 1 else np.inf


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def eval_Ub(spec, x):
    x = np.asarray(x, dtype=float)
    s = spec.smooth
    if isinstance(s, DimerRadial):
        r = np.sqrt(np.sum(_separations(spec, x)[..., 0, :] ** 2, axis=-1))
        out = s.radial(r)
    else:
        out = s.value(x)
    return out if np.ndim(out) else float(out)


def eval_Us(spec, x):
    x = np.asarray(x, dtype=float)
    if not spec.active_pairs():
        out = np.zeros(x.shape[:-1])
        return out if out.ndim else 0.0
    seps = _separations(spec, x)
    r = np.sqrt(np.sum(seps**2, axis=-1))
    cs = np.array([p.c for p in spec.pairs])
    active = cs != 0.0
    if np.any(r[..., active] == 0.0):
        raise SingularPoint("pair separation is exactly zero")
    with np.errstate(divide="ignore"):
        out = np.sum(np.where(active, cs / np.where(r == 0, np.inf, r), 0.0), axis=-1)
    return out if out.ndim else float(out)


def eval_U(spec, x):
    return eval_Ub(spec, x) + eval_Us(spec, x)


def singular_weight(spec, x):
    """U_s(x)^2, the integrable majorant scale for |grad U_s|."""
    us = eval_Us(spec, x)
    return us * us


def eval_gradUb(spec, x):
    x = np.asarray(x, dtype=float)
    s = spec.smooth
    if isinstance(s, DimerRadial):
        sep = _separations(spec, x)[..., 0, :]
        r = np.sqrt(np.sum(sep**2, axis=-1))
        if np.any(r == 0.0):
            raise NonDifferentiable("dimer radial profile gradient at r = 0")
        du = (s.radial_deriv(r) / r)[..., None] * sep
        if spec.layout == RELATIVE:
            return du
        g = np.zeros_like(x).reshape(x.shape[:-1] + (2, 3))
        g[..., 0, :] = du
        g[..., 1, :] = -du
        return g.reshape(x.shape)
    return s.grad(x)


def eval_gradUs(spec, x):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    active = spec.active_pairs()
    if not active:
        return g
    r = dist_to_singular(spec, x)
    if np.any(np.asarray(r) <= spec.guard_radius):
        raise SingularPoint(
            f"gradient within guard radius {spec.guard_radius:g} of the singular set"
        )
    if spec.layout == RELATIVE:
        p = active[0]
        rr = np.sqrt(np.sum(x**2, axis=-1))[..., None]
        return -p.c * x / rr**3
    gR = g.reshape(x.shape[:-1] + (spec.n_nuclei, 3))
    R = x.reshape(x.shape[:-1] + (spec.n_nuclei, 3))
    for p in active:
        sep = R[..., p.alpha, :] - R[..., p.beta, :]
        rr = np.sqrt(np.sum(sep**2, axis=-1))[..., None]
        f = -p.c * sep / rr**3
        gR[..., p.alpha, :] += f
        gR[..., p.beta, :] -= f
    return gR.reshape(x.shape)


def eval_gradU(spec, x):
    """Analytic gradient of U away from the singular set and the cone apex."""
    return eval_gradUb(spec, x) + eval_gradUs(spec, x)


def grad_s_block_max(spec, x):
    """max over nuclei of |grad_{R_a} U_s| (the Remark-style per-block norm);
    this is the quantity that c0() * singular_weight majorizes pointwise."""
    g = eval_gradUs(spec, x)
    if spec.layout == RELATIVE:
        # one separation coordinate: both nucleus blocks see the same magnitude
        return np.sqrt(np.sum(g**2, axis=-1))
    blocks = g.reshape(g.shape[:-1] + (spec.n_nuclei, 3))
    return np.max(np.sqrt(np.sum(blocks**2, axis=-1)), axis=-1)


def potential_hash(spec):
    import hashlib
    import json

    payload = json.dumps(spec.to_dict(), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def dimer_relative_spec(c12, smooth=None, guard_radius=1e-8):
    """Relative-coordinate reduction of an equal-mass two-nucleus system.

    The reduced coupling is ``c12 / sqrt(2)`` (orthogonal change of
    variables; see module docstring).
    """
    return PotentialSpec(
        dim=3,
        layout=RELATIVE,
        smooth=smooth if smooth is not None else Zero(),
        pairs=(PairInteraction(0, 1, c12 / math.sqrt(2.0)),),
        guard_radius=guard_radius,
    )
