"""Independent ground truths: exact chain spectrum, analytic kernels,
a finite-difference Hamiltonian, and a bisection eigenvalue check."""

from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .model import ChainSpec, ModelSpec, PhysicalParams, PotentialKind, potential_array

_FORBIDDEN_ONSITE = 1e12


# ---------------------------------------------------------------------------
# Oscillator chain
# ---------------------------------------------------------------------------

def chain_momenta(n_osc: int) -> np.ndarray:
    """Exactly n_osc lattice momenta 2 pi l / N, l = -floor((N-1)/2) .. ceil((N-1)/2)."""
    lo = -((n_osc - 1) // 2)
    return 2 * np.pi * np.arange(lo, lo + n_osc) / n_osc


def chain_frequencies(spec: ChainSpec) -> np.ndarray:
    k = chain_momenta(spec.n_osc)
    return np.sqrt(spec.omega_coupling**2 * (2 * np.sin(k / 2)) ** 2 + spec.omega_onsite**2)


def chain_quadratic_form(spec: ChainSpec) -> np.ndarray:
    """Matrix A with V(q) = q.A.q / 2 for the periodic chain."""
    n = spec.n_osc
    a = np.eye(n) * spec.omega_onsite**2
    w2 = spec.omega_coupling**2
    for j in range(n):
        k = (j + 1) % n
        a[j, j] += w2
        a[k, k] += w2
        a[j, k] -= w2
        a[k, j] -= w2
    return a


@dataclass(frozen=True)
class ExactChainSpectrum:
    frequencies: np.ndarray
    levels: list  # [(energy, occupation tuple)], ascending
    complete: bool  # False if further states tie with the last returned level

    @property
    def energies(self) -> np.ndarray:
        return np.array([e for e, _ in self.levels])


def occupation_levels(frequencies, hbar: float, count: int, tie_tol: float = 1e-12):
    """Lowest ``count`` levels of independent oscillators, best-first.

    Each occupation multiset is produced once by only adding quanta to modes
    at or after the last mode incremented. Children never lie below their
    parent, so popping the heap yields levels in ascending order and the
    first ``count`` pops are exactly the lowest levels.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    freqs = np.asarray(frequencies, dtype=float)
    quanta = hbar * freqs
    ground = 0.5 * float(np.sum(quanta))
    start = (0,) * freqs.size
    heap = [(ground, start, 0)]
    levels = []
    while heap and len(levels) < count:
        energy, occ, last = heapq.heappop(heap)
        levels.append((energy, occ))
        for j in range(last, freqs.size):
            child = occ[:j] + (occ[j] + 1,) + occ[j + 1:]
            e_child = ground + float(np.dot(child, quanta))
            heapq.heappush(heap, (e_child, child, j))
    complete = not heap or heap[0][0] > levels[-1][0] + tie_tol * max(1.0, abs(levels[-1][0]))
    return levels, complete


def chain_levels(spec: ChainSpec, hbar: float = 1.0, count: int = 20) -> ExactChainSpectrum:
    freqs = chain_frequencies(spec)
    levels, complete = occupation_levels(freqs, hbar, count)
    return ExactChainSpectrum(freqs, levels, complete)


def oracle_csv(energies) -> str:
    buf = io.StringIO()
    buf.write("n,E_exact\n")
    for i, e in enumerate(energies, 1):
        buf.write(f"{i},{e:.17g}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def exact_kernel(kind: str, params: PhysicalParams, dimension: int, x_a, x_b, t_total: float,
                 omega: float = 1.0) -> float:
    """Closed-form imaginary-time propagator, ``kind`` in {"free", "harmonic"}."""
    if not t_total > 0:
        raise ValueError("T must be positive")
    x_a = np.asarray(x_a, dtype=float).reshape(-1)
    x_b = np.asarray(x_b, dtype=float).reshape(-1)
    if x_a.size != dimension or x_b.size != dimension:
        raise ValueError(f"endpoints must have length {dimension}")
    m, hbar = params.mass, params.hbar
    if kind == "free":
        c = m / (hbar * t_total)
        return (c / (2 * math.pi)) ** (dimension / 2) * math.exp(-0.5 * c * float(np.sum((x_b - x_a) ** 2)))
    if kind != "harmonic":
        raise ValueError(f"unknown kernel kind {kind!r}")
    wt = omega * t_total
    sh = math.sinh(wt)
    coth = math.cosh(wt) / sh
    c = m * omega / hbar
    expo = -0.5 * c * float(np.sum((x_a**2 + x_b**2) * coth - 2 * x_a * x_b / sh))
    return (c / (2 * math.pi * sh)) ** (dimension / 2) * math.exp(expo)


def harmonic_trace(omega: float, t_total: float, hbar: float = 1.0) -> float:
    """sum_n exp(-(n + 1/2) hbar omega T / hbar) = 1 / (2 sinh(omega T / 2))."""
    return 1.0 / (2 * math.sinh(0.5 * omega * t_total))


# ---------------------------------------------------------------------------
# Finite-difference Hamiltonian
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridLevels:
    energies: np.ndarray
    boundary_amplitude: float  # max |psi_0| on the outermost grid points, psi_0 max-normalized


def grid_hamiltonian_levels(model: ModelSpec, n_points, box_low, box_high, count: int = 5) -> GridLevels:
    """Lowest eigenvalues of -(hbar^2/2m) Laplacian + V on a Dirichlet grid (D <= 2).

    ``n_points`` interior points per axis spanning the open box.
    """
    if model.is_chain:
        raise ValueError("grid oracle covers point particles only")
    d = model.dimension
    if d > 2:
        raise ValueError("grid oracle supports D <= 2")
    npts = np.broadcast_to(np.asarray(n_points, dtype=int), (d,))
    low = np.broadcast_to(np.asarray(box_low, dtype=float), (d,))
    high = np.broadcast_to(np.asarray(box_high, dtype=float), (d,))
    h = (high - low) / (npts + 1)
    axes = [low[i] + h[i] * np.arange(1, npts[i] + 1) for i in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    v = potential_array(model.kind, model.kernel_params(), grid)
    v = np.where(np.isfinite(v), v, _FORBIDDEN_ONSITE)
    t = model.params.hbar**2 / (2 * model.params.mass)
    if d == 1:
        diag = v + 2 * t / h[0] ** 2
        off = np.full(npts[0] - 1, -t / h[0] ** 2)
        k = min(count, npts[0])
        w, vec = scipy.linalg.eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
        psi0 = vec[:, 0]
        edge = max(abs(psi0[0]), abs(psi0[-1])) / np.max(np.abs(psi0))
        return GridLevels(w, float(edge))
    ops = []
    for i in range(d):
        lap = scipy.sparse.diags([np.full(npts[i] - 1, 1.0), np.full(npts[i], -2.0), np.full(npts[i] - 1, 1.0)],
                                 [-1, 0, 1]) / h[i] ** 2
        eye_before = scipy.sparse.identity(int(np.prod(npts[:i])))
        eye_after = scipy.sparse.identity(int(np.prod(npts[i + 1:])))
        ops.append(scipy.sparse.kron(scipy.sparse.kron(eye_before, lap), eye_after))
    ham = (-t * sum(ops) + scipy.sparse.diags(v)).tocsc()
    w, vec = scipy.sparse.linalg.eigsh(ham, k=count, sigma=float(np.min(v)) - 1.0, which="LM")
    order = np.argsort(w)
    psi0 = np.abs(vec[:, order[0]]).reshape(tuple(npts))
    border = max(psi0[0].max(), psi0[-1].max(), psi0[:, 0].max(), psi0[:, -1].max())
    return GridLevels(w[order], float(border / psi0.max()))


def analytic_levels(model: ModelSpec, count: int) -> np.ndarray | None:
    """Closed-form levels for the harmonic family and the chain; None otherwise."""
    hbar = model.params.hbar
    if model.is_chain:
        return chain_levels(model.geometry, hbar, count).energies
    g = model.geometry
    if g.kind is PotentialKind.HARMONIC:
        freqs = np.full(g.dimension, g.omega)
    elif g.kind is PotentialKind.COUPLED_HARMONIC_2D:
        m = model.params.mass
        lo = g.omega**2 - g.coupling / m
        if lo <= 0:
            return None
        freqs = np.sqrt([lo, g.omega**2 + g.coupling / m])
    else:
        return None
    levels, _ = occupation_levels(freqs, hbar, count)
    return np.array([e for e, _ in levels])


# ---------------------------------------------------------------------------
# Eigenvalue check by inertia bisection
# ---------------------------------------------------------------------------

def count_below(a: np.ndarray, shift: float) -> int:
    """Number of eigenvalues of symmetric ``a`` below ``shift`` (Sylvester inertia of A - shift I)."""
    m = np.array(a, dtype=float) - shift * np.eye(a.shape[0])
    n = m.shape[0]
    tiny = 1e-300
    negatives = 0
    for k in range(n):
        piv = m[k, k]
        if piv == 0.0:
            piv = tiny
        if piv < 0:
            negatives += 1
        if k + 1 < n:
            col = m[k + 1:, k] / piv
            m[k + 1:, k + 1:] -= np.outer(col, m[k, k + 1:])
    return negatives


def bisection_eigenvalues(a, tol: float = 1e-13) -> np.ndarray:
    """All eigenvalues of a small symmetric matrix by bisection on the inertia count."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    radius = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
    lo0 = float(np.min(np.diag(a) - radius)) - 1.0
    hi0 = float(np.max(np.diag(a) + radius)) + 1.0
    out = np.empty(n)
    for i in range(n):
        lo, hi = lo0, hi0
        while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if count_below(a, mid) > i:
                hi = mid
            else:
                lo = mid
        out[i] = 0.5 * (lo + hi)
    return out
