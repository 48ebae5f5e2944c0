"""Pure-Python velocity-Verlet kernel (fallback for the compiled extension).

Semantics are identical to ``_verlet.pyx``: per-particle adaptive
substepping with kick-drift-kick updates, abort (status 1, particle frozen)
when a trajectory enters the guard radius of the singular set or of the
cone apex.  Potentials arrive pre-encoded; see ``classical._encode_spec``.
"""

import numpy as np

BACKEND = "python"

SMOOTH_ZERO = 0
SMOOTH_HARMONIC = 1
SMOOTH_QUARTIC = 2
SMOOTH_SOFT_COULOMB = 3
SMOOTH_CROSSING_CONE = 4
SMOOTH_DIMER_RADIAL = 5

LAYOUT_FLAT = 0
LAYOUT_NUCLEAR = 1
LAYOUT_RELATIVE = 2


def _dist_singular(x, layout, pair_idx, pair_c):
    if layout == LAYOUT_RELATIVE:
        return np.sqrt(x @ x)
    best = np.inf
    for (a, b), c in zip(pair_idx, pair_c):
        if c == 0.0:
            continue
        sep = x[3 * a:3 * a + 3] - x[3 * b:3 * b + 3]
        best = min(best, np.sqrt(sep @ sep))
    return best


def _force(x, layout, smooth_kind, sparams, pair_idx, pair_c, f):
    f[:] = 0.0
    d = x.shape[0]
    if smooth_kind == SMOOTH_HARMONIC:
        f -= sparams[:d] * x
    elif smooth_kind == SMOOTH_QUARTIC:
        f -= sparams[0] * x**3
    elif smooth_kind == SMOOTH_SOFT_COULOMB:
        r2 = x @ x
        f += sparams[0] * x * (r2 + sparams[1] ** 2) ** -1.5
    elif smooth_kind == SMOOTH_CROSSING_CONE:
        r = np.sqrt(x @ x)
        if r > 0.0:
            f += sparams[0] * x / r
    elif smooth_kind == SMOOTH_DIMER_RADIAL:
        d_e, a, r_e = sparams[0], sparams[1], sparams[2]
        if layout == LAYOUT_RELATIVE:
            sep = x
        else:
            sep = x[0:3] - x[3:6]
        r = np.sqrt(sep @ sep)
        e = np.exp(-a * (r - r_e))
        du = 2.0 * d_e * a * (1.0 - e) * e / r
        if layout == LAYOUT_RELATIVE:
            f -= du * sep
        else:
            f[0:3] -= du * sep
            f[3:6] += du * sep
    if layout == LAYOUT_RELATIVE:
        for (_, _), c in zip(pair_idx, pair_c):
            if c == 0.0:
                continue
            r = np.sqrt(x @ x)
            f += c * x / r**3
    elif layout == LAYOUT_NUCLEAR:
        for (a, b), c in zip(pair_idx, pair_c):
            if c == 0.0:
                continue
            sep = x[3 * a:3 * a + 3] - x[3 * b:3 * b + 3]
            r = np.sqrt(sep @ sep)
            g = c * sep / r**3
            f[3 * a:3 * a + 3] += g
            f[3 * b:3 * b + 3] -= g


def advance(
    x,
    p,
    status,
    dt_total,
    dt_nominal,
    eta,
    guard,
    layout,
    smooth_kind,
    sparams,
    pair_idx,
    pair_c,
    cmax,
):
    """Advance every particle with status 0 by ``dt_total``; returns the
    number of (new) failures.  Arrays are modified in place."""
    n, d = x.shape
    has_cone = smooth_kind == SMOOTH_CROSSING_CONE
    has_pairs = len(pair_c) > 0 and np.any(np.asarray(pair_c) != 0.0)
    f = np.zeros(d)
    nfail = 0
    sign = 1.0 if dt_total >= 0 else -1.0
    for i in range(n):
        if status[i] != 0:
            continue
        xi = x[i]
        pi = p[i]
        remaining = abs(dt_total)
        failed = False
        while remaining > 0.0:
            r = _dist_singular(xi, layout, pair_idx, pair_c) if has_pairs else np.inf
            if r <= guard or (has_cone and np.sqrt(xi @ xi) <= guard):
                failed = True
                break
            h = min(remaining, abs(dt_nominal))
            if np.isfinite(r):
                speed = np.sqrt(pi @ pi)
                if speed > 0.0:
                    h = min(h, eta * r / speed)
                if cmax > 0.0:
                    h = min(h, eta * np.sqrt(r**3 / cmax))
            hs = sign * h
            _force(xi, layout, smooth_kind, sparams, pair_idx, pair_c, f)
            pi += 0.5 * hs * f
            xi += hs * pi
            if has_pairs:
                r = _dist_singular(xi, layout, pair_idx, pair_c)
                if r <= guard:
                    failed = True
                    break
            _force(xi, layout, smooth_kind, sparams, pair_idx, pair_c, f)
            pi += 0.5 * hs * f
            remaining -= h
        if failed:
            status[i] = 1
            nfail += 1
    return nfail
