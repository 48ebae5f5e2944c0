# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled velocity-Verlet kernel with per-particle adaptive substeps.

Mirrors ``_verlet_py`` exactly; selected automatically at import when the
extension built.  The hot loop is the per-substep force evaluation near
Coulomb singularities, where the adaptive rule can demand thousands of
substeps per nominal step.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, sqrt

BACKEND = "compiled"

cdef int SMOOTH_ZERO = 0
cdef int SMOOTH_HARMONIC = 1
cdef int SMOOTH_QUARTIC = 2
cdef int SMOOTH_SOFT_COULOMB = 3
cdef int SMOOTH_CROSSING_CONE = 4
cdef int SMOOTH_DIMER_RADIAL = 5

cdef int LAYOUT_FLAT = 0
cdef int LAYOUT_NUCLEAR = 1
cdef int LAYOUT_RELATIVE = 2


cdef double _dist_singular(double* x, Py_ssize_t d, int layout,
                           long[:, ::1] pair_idx, double[::1] pair_c) noexcept nogil:
    cdef double best = INFINITY
    cdef double sx, sy, sz, r
    cdef Py_ssize_t q, a, b
    if layout == LAYOUT_RELATIVE:
        return sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    for q in range(pair_c.shape[0]):
        if pair_c[q] == 0.0:
            continue
        a = pair_idx[q, 0]
        b = pair_idx[q, 1]
        sx = x[3 * a] - x[3 * b]
        sy = x[3 * a + 1] - x[3 * b + 1]
        sz = x[3 * a + 2] - x[3 * b + 2]
        r = sqrt(sx * sx + sy * sy + sz * sz)
        if r < best:
            best = r
    return best


cdef void _force(double* x, double* f, Py_ssize_t d, int layout, int smooth_kind,
                 double[::1] sparams, long[:, ::1] pair_idx,
                 double[::1] pair_c) noexcept nogil:
    cdef Py_ssize_t i, q, a, b
    cdef double r2, r, e, du, g, sx, sy, sz, d_e, aa, r_e, c
    for i in range(d):
        f[i] = 0.0
    if smooth_kind == SMOOTH_HARMONIC:
        for i in range(d):
            f[i] -= sparams[i] * x[i]
    elif smooth_kind == SMOOTH_QUARTIC:
        for i in range(d):
            f[i] -= sparams[0] * x[i] * x[i] * x[i]
    elif smooth_kind == SMOOTH_SOFT_COULOMB:
        r2 = 0.0
        for i in range(d):
            r2 += x[i] * x[i]
        r2 = (r2 + sparams[1] * sparams[1]) ** -1.5
        for i in range(d):
            f[i] += sparams[0] * x[i] * r2
    elif smooth_kind == SMOOTH_CROSSING_CONE:
        r2 = 0.0
        for i in range(d):
            r2 += x[i] * x[i]
        r = sqrt(r2)
        if r > 0.0:
            for i in range(d):
                f[i] += sparams[0] * x[i] / r
    elif smooth_kind == SMOOTH_DIMER_RADIAL:
        d_e = sparams[0]
        aa = sparams[1]
        r_e = sparams[2]
        if layout == LAYOUT_RELATIVE:
            r = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
            e = exp(-aa * (r - r_e))
            du = 2.0 * d_e * aa * (1.0 - e) * e / r
            for i in range(3):
                f[i] -= du * x[i]
        else:
            sx = x[0] - x[3]
            sy = x[1] - x[4]
            sz = x[2] - x[5]
            r = sqrt(sx * sx + sy * sy + sz * sz)
            e = exp(-aa * (r - r_e))
            du = 2.0 * d_e * aa * (1.0 - e) * e / r
            f[0] -= du * sx
            f[1] -= du * sy
            f[2] -= du * sz
            f[3] += du * sx
            f[4] += du * sy
            f[5] += du * sz
    if layout == LAYOUT_RELATIVE:
        for q in range(pair_c.shape[0]):
            c = pair_c[q]
            if c == 0.0:
                continue
            r = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
            g = c / (r * r * r)
            for i in range(3):
                f[i] += g * x[i]
    elif layout == LAYOUT_NUCLEAR:
        for q in range(pair_c.shape[0]):
            c = pair_c[q]
            if c == 0.0:
                continue
            a = pair_idx[q, 0]
            b = pair_idx[q, 1]
            sx = x[3 * a] - x[3 * b]
            sy = x[3 * a + 1] - x[3 * b + 1]
            sz = x[3 * a + 2] - x[3 * b + 2]
            r = sqrt(sx * sx + sy * sy + sz * sz)
            g = c / (r * r * r)
            f[3 * a] += g * sx
            f[3 * a + 1] += g * sy
            f[3 * a + 2] += g * sz
            f[3 * b] -= g * sx
            f[3 * b + 1] -= g * sy
            f[3 * b + 2] -= g * sz


def advance(
    double[:, ::1] x,
    double[:, ::1] p,
    long[::1] status,
    double dt_total,
    double dt_nominal,
    double eta,
    double guard,
    int layout,
    int smooth_kind,
    double[::1] sparams,
    long[:, ::1] pair_idx,
    double[::1] pair_c,
    double cmax,
):
    """Advance every particle with status 0 by ``dt_total``; returns the
    number of (new) failures.  Arrays are modified in place."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef bint has_cone = smooth_kind == SMOOTH_CROSSING_CONE
    cdef bint has_pairs = False
    cdef Py_ssize_t q, i, j
    for q in range(pair_c.shape[0]):
        if pair_c[q] != 0.0:
            has_pairs = True
    fbuf = np.zeros(d)
    cdef double[::1] fv = fbuf
    cdef double* f
    cdef double* xi
    cdef double* pi
    cdef double remaining, r, h, hs, speed, r2, sign
    cdef bint failed
    cdef long nfail = 0
    sign = 1.0 if dt_total >= 0 else -1.0
    with nogil:
        f = &fv[0]
        for i in range(n):
            if status[i] != 0:
                continue
            xi = &x[i, 0]
            pi = &p[i, 0]
            remaining = dt_total if dt_total >= 0 else -dt_total
            failed = False
            while remaining > 0.0:
                if has_pairs:
                    r = _dist_singular(xi, d, layout, pair_idx, pair_c)
                else:
                    r = INFINITY
                if r <= guard:
                    failed = True
                    break
                if has_cone:
                    r2 = 0.0
                    for j in range(d):
                        r2 += xi[j] * xi[j]
                    if sqrt(r2) <= guard:
                        failed = True
                        break
                h = remaining
                if dt_nominal >= 0:
                    if dt_nominal < h:
                        h = dt_nominal
                elif -dt_nominal < h:
                    h = -dt_nominal
                if r != INFINITY:
                    speed = 0.0
                    for j in range(d):
                        speed += pi[j] * pi[j]
                    speed = sqrt(speed)
                    if speed > 0.0 and eta * r / speed < h:
                        h = eta * r / speed
                    if cmax > 0.0 and eta * sqrt(r * r * r / cmax) < h:
                        h = eta * sqrt(r * r * r / cmax)
                hs = sign * h
                _force(xi, f, d, layout, smooth_kind, sparams, pair_idx, pair_c)
                for j in range(d):
                    pi[j] += 0.5 * hs * f[j]
                for j in range(d):
                    xi[j] += hs * pi[j]
                if has_pairs:
                    r = _dist_singular(xi, d, layout, pair_idx, pair_c)
                    if r <= guard:
                        failed = True
                        break
                _force(xi, f, d, layout, smooth_kind, sparams, pair_idx, pair_c)
                for j in range(d):
                    pi[j] += 0.5 * hs * f[j]
                remaining -= h
            if failed:
                status[i] = 1
                nfail += 1
    return int(nfail)
