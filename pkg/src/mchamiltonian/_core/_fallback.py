"""Pure numpy versions of the compiled kernels, same signatures and semantics."""

import numpy as np

from ..model import potential_array

BACKEND = "python"


def potential_values(kind, params, x):
    return potential_array(kind, np.asarray(params, dtype=float), np.asarray(x, dtype=float))


def bridge_from_normals(z, variance_scale):
    z = np.asarray(z, dtype=float)
    s = z.shape[1]
    n = s + 1
    k = np.arange(1, n)
    shrink = (n - k) / (n - k + 1.0)
    width = np.sqrt(variance_scale * shrink)
    out = np.empty_like(z)
    out[:, 0] = width[0] * z[:, 0]
    for i in range(1, s):
        out[:, i] = shrink[i] * out[:, i - 1] + width[i] * z[:, i]
    return out


def path_actions(fluct, starts, ends, kind, params, dt):
    fluct = np.asarray(fluct, dtype=float)
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    params = np.asarray(params, dtype=float)
    s = fluct.shape[1]
    frac = np.arange(1, s + 1) / (s + 1.0)
    out = np.empty((starts.shape[0], fluct.shape[0]))
    for e in range(starts.shape[0]):
        a, b = starts[e], ends[e]
        line = a + frac[:, None] * (b - a)
        inner = potential_array(kind, params, line[None] + fluct).sum(axis=1)
        edge = 0.5 * (potential_array(kind, params, a) + potential_array(kind, params, b))
        out[e] = (inner + edge) * dt
    return out


def jacobi_eigh(a_in, tol=0.0, max_sweeps=100):
    """Cyclic Jacobi with row/column rotations applied as numpy slices."""
    a = np.array(a_in, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    sweep = 0
    while sweep < max_sweeps:
        off = np.sum(np.abs(np.triu(a, 1)))
        if off == 0.0 or off <= tol * scale:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                g = 100.0 * abs(apq)
                if sweep > 4 and abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = a[q, p] = 0.0
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + g == abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                    if theta < 0:
                        t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diagonal(a).copy(), v, sweep
