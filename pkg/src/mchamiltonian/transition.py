"""Normalized transition matrix M[n', n] = sqrt(dx_n' dx_n) <x_n', T | x_n, 0>."""

from __future__ import annotations

import hashlib
import io
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as rng_streams
from .basis import BasisSet
from .model import ModelSpec, PhysicalParams
from .sampler import (
    PathEnsembleStats,
    SamplerConfig,
    check_endpoint_allowed,
    ensemble_stats,
    free_ensemble,
    measure_potential_weight,
)

MAGIC = b"MCHMAT01"
_HEADER = struct.Struct("<8sQdQ")
FLAG_RELATIVE_ERROR = 0.5


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    values: np.ndarray
    errors: np.ndarray
    t_total: float
    basis_ref: str = ""
    seed: int = 0

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def flagged(self) -> np.ndarray:
        """Entries whose relative standard error exceeds 50%."""
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(self.values != 0, self.errors / np.abs(self.values), np.inf)
        return rel > FLAG_RELATIVE_ERROR

    @property
    def asymmetry(self) -> float:
        """max |M - M^T| / max |M|."""
        top = np.max(np.abs(self.values))
        return float(np.max(np.abs(self.values - self.values.T)) / top) if top > 0 else 0.0

    @property
    def relative_error_level(self) -> float:
        """Frobenius norm of the error matrix relative to the matrix itself."""
        norm = np.linalg.norm(self.values)
        return float(np.linalg.norm(self.errors) / norm) if norm > 0 else 0.0

    def to_bytes(self) -> bytes:
        n = self.size
        head = _HEADER.pack(MAGIC, n, float(self.t_total), int(self.seed))
        return head + self.values.astype("<f8").tobytes() + self.errors.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "TransitionMatrix":
        magic, n, t_total, seed = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ValueError("not a transition-matrix dump")
        off = _HEADER.size
        count = n * n
        body = np.frombuffer(data, dtype="<f8", count=2 * count, offset=off)
        return cls(body[:count].reshape(n, n).copy(), body[count:].reshape(n, n).copy(), t_total, "", seed)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("row,col,value,error\n")
        for i in range(self.size):
            for j in range(self.size):
                buf.write(f"{i},{j},{self.values[i, j]:.17g},{self.errors[i, j]:.17g}\n")
        return buf.getvalue()


def free_kernel(params: PhysicalParams, dimension: int, x_a, x_b, t_total: float) -> float:
    """Free-particle propagator (m/(2 pi hbar T))^(D/2) exp(-m |x_b - x_a|^2 / (2 hbar T))."""
    if not t_total > 0:
        raise ValueError("T must be positive")
    x_a = np.asarray(x_a, dtype=float).reshape(-1)
    x_b = np.asarray(x_b, dtype=float).reshape(-1)
    if x_a.shape[0] != dimension or x_b.shape[0] != dimension:
        raise ValueError(f"endpoints must have length {dimension}")
    r2 = float(np.sum((x_b - x_a) ** 2))
    c = params.mass / (params.hbar * t_total)
    return (c / (2 * math.pi)) ** (dimension / 2) * math.exp(-0.5 * c * r2)


def _free_kernel_rows(params: PhysicalParams, starts: np.ndarray, ends: np.ndarray, t_total: float) -> np.ndarray:
    d = starts.shape[1]
    c = params.mass / (params.hbar * t_total)
    r2 = np.sum((ends - starts) ** 2, axis=1)
    return (c / (2 * math.pi)) ** (d / 2) * np.exp(-0.5 * c * r2)


def amplitude(model: ModelSpec, x_a, x_b, cfg: SamplerConfig) -> tuple[float, float]:
    """<x_b, T | x_a, 0> as (value, standard error)."""
    stats = measure_potential_weight(model, x_a, x_b, cfg)
    k0 = free_kernel(model.params, model.dimension, x_a, x_b, model.time.t_total)
    return stats.mean_weight * k0, stats.std_error * k0


def basis_fingerprint(basis: BasisSet) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(basis.positions).tobytes())
    h.update(np.ascontiguousarray(basis.cell_measures).tobytes())
    h.update(np.ascontiguousarray(basis.keys).tobytes())
    return h.hexdigest()[:16]


def _pairs(basis: BasisSet, symmetric_fill: bool) -> tuple[np.ndarray, np.ndarray]:
    """(row, col) index pairs to measure, and the path direction for each.

    Paths run from column node to row node. With symmetric fill each
    unordered pair is measured once, oriented from the smaller node key to
    the larger, so the result does not depend on node order.
    """
    n = len(basis)
    keys = basis.keys
    if symmetric_fill:
        order = np.argsort(keys, kind="stable")
        iu, ju = np.triu_indices(n)
        # column = smaller key (path start), row = larger key
        return order[ju], order[iu]
    rows, cols = np.indices((n, n))
    return rows.ravel(), cols.ravel()


def _measure_chunk(model: ModelSpec, basis: BasisSet, cfg: SamplerConfig, rows: np.ndarray, cols: np.ndarray,
                   shared) -> list[PathEnsembleStats]:
    starts = basis.positions[cols]
    ends = basis.positions[rows]
    if shared is not None:
        return ensemble_stats(model, shared, starts, ends, cfg.n_batches)
    out = []
    for r, c, a, b in zip(rows, cols, starts, ends):
        gen = rng_streams.stream(cfg.seed, rng_streams.ENTRY, int(basis.keys[r]), int(basis.keys[c]))
        ens = free_ensemble(model, cfg.n_paths, cfg.method, gen)
        out.extend(ensemble_stats(model, ens, a[None], b[None], cfg.n_batches))
    return out


def build_matrix(model: ModelSpec, basis: BasisSet, cfg: SamplerConfig, symmetric_fill: bool = True,
                 threads: int = 1) -> TransitionMatrix:
    """Estimate every matrix element; results are independent of ``threads``."""
    if basis.dimension != model.dimension:
        raise ValueError(f"basis dimension {basis.dimension} does not match model dimension {model.dimension}")
    for x in basis.positions:
        check_endpoint_allowed(model, x)
    rows, cols = _pairs(basis, symmetric_fill)
    shared = None
    if cfg.streams == "shared":
        shared = free_ensemble(model, cfg.n_paths, cfg.method, rng_streams.stream(cfg.seed, rng_streams.ENSEMBLE))
        per_chunk = max(1, 2_000_000 // (cfg.n_paths * max(1, model.time.n_slices)))
    else:
        per_chunk = 16
    bounds = list(range(0, rows.size, per_chunk)) + [rows.size]
    chunks = [(rows[a:b], cols[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]

    def work(chunk):
        return _measure_chunk(model, basis, cfg, chunk[0], chunk[1], shared)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]
    stats = [s for part in results for s in part]

    mean = np.array([s.mean_weight for s in stats])
    err = np.array([s.std_error for s in stats])
    k0 = _free_kernel_rows(model.params, basis.positions[cols], basis.positions[rows], model.time.t_total)
    norm = np.sqrt(basis.cell_measures[rows] * basis.cell_measures[cols])
    n = len(basis)
    values = np.zeros((n, n))
    errors = np.zeros((n, n))
    values[rows, cols] = norm * k0 * mean
    errors[rows, cols] = norm * k0 * err
    if symmetric_fill:
        values[cols, rows] = values[rows, cols]
        errors[cols, rows] = errors[rows, cols]
    return TransitionMatrix(values, errors, model.time.t_total, basis_fingerprint(basis), cfg.seed)
