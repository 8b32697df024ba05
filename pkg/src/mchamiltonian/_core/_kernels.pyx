# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: bridge construction, path actions, cyclic Jacobi."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cosh, fabs, INFINITY

cnp.import_array()

# Codes must match mchamiltonian.model.PotentialKind.
cdef enum:
    ZERO = 0
    HARMONIC = 1
    SECH_WELL = 2
    ANHARMONIC = 3
    ABS_LINEAR = 4
    WALL_LINEAR = 5
    COUPLED_HARMONIC_2D = 6
    CHAIN = 7

BACKEND = "compiled"


cdef inline double _potential(const double* x, Py_ssize_t d, int kind, const double* p) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0, t = 0.0, q, c
    if kind == ZERO:
        return 0.0
    if kind == HARMONIC:
        for i in range(d):
            s += x[i] * x[i]
        return 0.5 * p[0] * p[1] * p[1] * s
    if kind == SECH_WELL:
        c = cosh(x[0])
        return -p[1] / (c * c)
    if kind == ANHARMONIC:
        q = x[0] * x[0]
        return 0.5 * q + 0.25 * q * q
    if kind == ABS_LINEAR:
        return 0.5 * fabs(x[0])
    if kind == WALL_LINEAR:
        if x[0] < 0.0:
            return INFINITY
        return p[1] * x[0]
    if kind == COUPLED_HARMONIC_2D:
        return 0.5 * p[0] * p[1] * p[1] * (x[0] * x[0] + x[1] * x[1]) + p[2] * x[0] * x[1]
    # periodic chain
    for i in range(d):
        q = x[i] - x[(i + 1) % d]
        s += q * q
        t += x[i] * x[i]
    return 0.5 * (p[1] * p[1] * s + p[2] * p[2] * t)


def potential_values(int kind, const double[::1] params, const double[:, ::1] x):
    """V at each row of ``x``."""
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _potential(&x[i, 0], d, kind, &params[0])
    return out


def bridge_from_normals(const double[:, :, ::1] z, double variance_scale):
    """Zero-endpoint bridges by sequential conditioning.

    ``z`` holds standard normals with shape (paths, n_slices - 1, D). Slice k
    given slice k-1 has mean x_{k-1} (n-k)/(n-k+1) and variance
    ``variance_scale`` (n-k)/(n-k+1), where variance_scale = hbar dt / m.
    """
    cdef Py_ssize_t npath = z.shape[0], s = z.shape[1], d = z.shape[2]
    cdef Py_ssize_t n = s + 1, p, k, a
    out = np.empty((npath, s, d))
    cdef double[:, :, ::1] b = out
    cdef double[::1] shrink = np.empty(s), width = np.empty(s)
    for k in range(1, n):
        shrink[k - 1] = (n - k) / <double>(n - k + 1)
        width[k - 1] = sqrt(variance_scale * shrink[k - 1])
    with nogil:
        for p in range(npath):
            for a in range(d):
                b[p, 0, a] = width[0] * z[p, 0, a]
            for k in range(1, s):
                for a in range(d):
                    b[p, k, a] = shrink[k] * b[p, k - 1, a] + width[k] * z[p, k, a]
    return out


def path_actions(const double[:, :, ::1] fluct, const double[:, ::1] starts,
                 const double[:, ::1] ends, int kind, const double[::1] params, double dt):
    """Trapezoidal potential action of every (entry, path) pair.

    Path p for entry e is the straight line from starts[e] to ends[e] plus
    the zero-endpoint fluctuation fluct[p]. Returns shape (entries, paths);
    paths entering a forbidden region get +inf.
    """
    cdef Py_ssize_t npath = fluct.shape[0], s = fluct.shape[1], d = fluct.shape[2]
    cdef Py_ssize_t ne = starts.shape[0], n = s + 1, sd = s * d
    cdef Py_ssize_t e, p, k, a, i
    cdef double ends_term, acc, frac, y, scale, y0, prev, bond, onsite
    out = np.empty((ne, npath))
    cdef double[:, ::1] o = out
    cdef double[::1] buf = np.empty(d)
    cdef double[:, ::1] line = np.empty((s, d))
    cdef const double* prm = &params[0]
    cdef const double* fp
    cdef double* lp = &line[0, 0]
    cdef double* bp = &buf[0]
    if npath == 0 or ne == 0:
        return out
    with nogil:
        for e in range(ne):
            ends_term = 0.5 * (_potential(&starts[e, 0], d, kind, prm) + _potential(&ends[e, 0], d, kind, prm))
            for k in range(s):
                frac = (k + 1) / <double>n
                for a in range(d):
                    line[k, a] = starts[e, a] + frac * (ends[e, a] - starts[e, a])
            if kind == HARMONIC:
                # quadratic: one flat sum of squares per path
                scale = 0.5 * prm[0] * prm[1] * prm[1]
                for p in range(npath):
                    fp = &fluct[p, 0, 0]
                    acc = 0.0
                    for i in range(sd):
                        y = lp[i] + fp[i]
                        acc = acc + y * y
                    o[e, p] = (ends_term + scale * acc) * dt
                continue
            if kind == CHAIN:
                # periodic chain: bond and onsite sums per slice, wrap-around bond handled once
                for p in range(npath):
                    fp = &fluct[p, 0, 0]
                    bond = 0.0
                    onsite = 0.0
                    for k in range(s):
                        y0 = lp[k * d] + fp[k * d]
                        prev = y0
                        onsite = onsite + y0 * y0
                        for a in range(1, d):
                            y = lp[k * d + a] + fp[k * d + a]
                            bond = bond + (prev - y) * (prev - y)
                            onsite = onsite + y * y
                            prev = y
                        bond = bond + (prev - y0) * (prev - y0)
                    o[e, p] = (ends_term + 0.5 * (prm[1] * prm[1] * bond + prm[2] * prm[2] * onsite)) * dt
                continue
            for p in range(npath):
                fp = &fluct[p, 0, 0]
                acc = ends_term
                for k in range(s):
                    for a in range(d):
                        bp[a] = lp[k * d + a] + fp[k * d + a]
                    acc = acc + _potential(bp, d, kind, prm)
                o[e, p] = acc * dt
    return out


cdef inline void _rotate(double[:, ::1] a, Py_ssize_t i, Py_ssize_t j, Py_ssize_t k, Py_ssize_t l,
                         double s, double tau) noexcept nogil:
    cdef double g = a[i, j], h = a[k, l]
    a[i, j] = g - s * (h + g * tau)
    a[k, l] = h + s * (g - h * tau)


def jacobi_eigh(a_in, double tol=0.0, int max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Returns (eigenvalues, eigenvectors as columns, sweeps used). Eigenvalues
    are unsorted.
    """
    a_np = np.array(a_in, dtype=float, order="C", copy=True)
    cdef Py_ssize_t n = a_np.shape[0], p, q, j
    cdef double[:, ::1] a = a_np
    v_np = np.eye(n)
    cdef double[:, ::1] v = v_np
    d_np = np.diagonal(a_np).copy()
    cdef double[::1] d = d_np
    cdef double[::1] b = d_np.copy()
    cdef double[::1] z = np.zeros(n)
    cdef double off, thresh, g, h, t, theta, c, s, tau, scale
    cdef int sweep = 0
    with nogil:
        scale = 0.0
        for p in range(n):
            for q in range(n):
                scale = scale + a[p, q] * a[p, q]
        scale = sqrt(scale)
        while sweep < max_sweeps:
            off = 0.0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    off = off + fabs(a[p, q])
            if off == 0.0 or off <= tol * scale:
                break
            sweep += 1
            thresh = 0.2 * off / (n * n) if sweep < 4 else 0.0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    g = 100.0 * fabs(a[p, q])
                    if sweep > 4 and fabs(d[p]) + g == fabs(d[p]) and fabs(d[q]) + g == fabs(d[q]):
                        a[p, q] = 0.0
                    elif fabs(a[p, q]) > thresh:
                        h = d[q] - d[p]
                        if fabs(h) + g == fabs(h):
                            t = a[p, q] / h
                        else:
                            theta = 0.5 * h / a[p, q]
                            t = 1.0 / (fabs(theta) + sqrt(1.0 + theta * theta))
                            if theta < 0.0:
                                t = -t
                        c = 1.0 / sqrt(1.0 + t * t)
                        s = t * c
                        tau = s / (1.0 + c)
                        h = t * a[p, q]
                        z[p] -= h
                        z[q] += h
                        d[p] -= h
                        d[q] += h
                        a[p, q] = 0.0
                        for j in range(p):
                            _rotate(a, j, p, j, q, s, tau)
                        for j in range(p + 1, q):
                            _rotate(a, p, j, j, q, s, tau)
                        for j in range(q + 1, n):
                            _rotate(a, p, j, q, j, s, tau)
                        for j in range(n):
                            _rotate(v, j, p, j, q, s, tau)
            for p in range(n):
                b[p] += z[p]
                d[p] = b[p]
                z[p] = 0.0
    return d_np, v_np, sweep
