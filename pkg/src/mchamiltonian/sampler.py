"""Free-path ensembles with fixed endpoints and the potential weight <O_V>.

A free path from ``a`` to ``b`` is the straight line between them plus a
fluctuation that vanishes at both ends. The free action splits exactly into
the two pieces (the cross term is a telescoping sum of the fluctuation), so
the fluctuation ensemble is endpoint independent. Both samplers therefore
produce fluctuations only, and the line is added per matrix entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

from . import rng as rng_streams
from ._core import kernels
from .model import ModelSpec, is_forbidden, evaluate_potential


@dataclass(frozen=True)
class BrownianBridge:
    """Exact, independent draws from the free bridge measure."""


@dataclass(frozen=True)
class Metropolis:
    """Single-site Metropolis on the bridge fluctuation, run as parallel chains."""

    step_size: float = 0.5
    n_thermalize: int = 200
    n_decorrelate: int = 4
    n_chains: int = 16

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.n_thermalize < 0 or self.n_decorrelate < 1 or self.n_chains < 1:
            raise ValueError("need n_thermalize >= 0, n_decorrelate >= 1, n_chains >= 1")


Method = Union[BrownianBridge, Metropolis]


@dataclass(frozen=True)
class SamplerConfig:
    """Monte Carlo settings for one transition-matrix build.

    ``streams="shared"`` measures every matrix entry on one common fluctuation
    ensemble; ``"per_entry"`` gives each entry its own stream keyed by the
    node pair.
    """

    n_paths: int = 1000
    method: Method = field(default_factory=BrownianBridge)
    seed: int = 20240611
    n_batches: int = 32
    streams: Literal["shared", "per_entry"] = "shared"

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 2:
            raise ValueError("n_paths must be an integer >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.n_batches < 2:
            raise ValueError("n_batches must be >= 2")
        if self.streams not in ("shared", "per_entry"):
            raise ValueError(f"unknown stream policy {self.streams!r}")


@dataclass(frozen=True)
class PathEnsembleStats:
    mean_weight: float
    std_error: float
    n_effective: float
    acceptance_rate: float = 1.0


@dataclass(frozen=True)
class FluctuationEnsemble:
    """Zero-endpoint fluctuations, shape (n_paths, n_slices - 1, D)."""

    paths: np.ndarray
    acceptance_rate: float = 1.0


def _variance_scale(model: ModelSpec) -> float:
    return model.params.hbar * model.time.dt / model.params.mass


def _bridge_ensemble(model: ModelSpec, n_paths: int, gen: np.random.Generator) -> FluctuationEnsemble:
    z = gen.standard_normal((n_paths, model.time.n_slices - 1, model.dimension))
    return FluctuationEnsemble(kernels.bridge_from_normals(z, _variance_scale(model)))


def _metropolis_ensemble(model: ModelSpec, n_paths: int, method: Metropolis,
                         gen: np.random.Generator) -> FluctuationEnsemble:
    n_int = model.time.n_slices - 1
    d = model.dimension
    chains = min(method.n_chains, n_paths)
    per_chain = -(-n_paths // chains)
    coef = 0.5 * model.params.mass / (model.time.dt * model.params.hbar)
    # padded with the fixed zero endpoints
    b = np.zeros((chains, n_int + 2, d))
    parity = [np.arange(1, n_int + 1, 2), np.arange(2, n_int + 1, 2)]
    accepted = 0
    proposed = 0

    def sweep():
        nonlocal accepted, proposed
        for sites in parity:
            if sites.size == 0:
                continue
            old = b[:, sites]
            left = b[:, sites - 1]
            right = b[:, sites + 1]
            new = old + method.step_size * gen.uniform(-1.0, 1.0, old.shape)
            d_s = coef * ((new - left) ** 2 + (right - new) ** 2 - (old - left) ** 2 - (right - old) ** 2)
            ok = gen.random(old.shape) < np.exp(-d_s)
            b[:, sites] = np.where(ok, new, old)
            accepted += int(ok.sum())
            proposed += ok.size

    for _ in range(method.n_thermalize):
        sweep()
    accepted = proposed = 0
    out = np.empty((chains, per_chain, n_int, d))
    for i in range(per_chain):
        for _ in range(method.n_decorrelate):
            sweep()
        out[:, i] = b[:, 1:-1]
    # chain-major order keeps each batch inside one chain
    paths = np.ascontiguousarray(out.reshape(chains * per_chain, n_int, d)[:n_paths])
    return FluctuationEnsemble(paths, accepted / proposed if proposed else 1.0)


def free_ensemble(model: ModelSpec, n_paths: int, method: Method, gen: np.random.Generator) -> FluctuationEnsemble:
    if isinstance(method, Metropolis):
        return _metropolis_ensemble(model, n_paths, method, gen)
    return _bridge_ensemble(model, n_paths, gen)


def _endpoint(model: ModelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.dimension:
        raise ValueError(f"endpoint must have length {model.dimension}, got {x.shape[0]}")
    return x


def sample_free_path(model: ModelSpec, x_start, x_end, gen: np.random.Generator) -> np.ndarray:
    """One exact bridge path with ``n_slices + 1`` points, shape (n_slices + 1, D)."""
    a = _endpoint(model, x_start)
    b = _endpoint(model, x_end)
    fluct = _bridge_ensemble(model, 1, gen).paths[0]
    n = model.time.n_slices
    frac = np.arange(n + 1)[:, None] / n
    path = a + frac * (b - a)
    path[1:-1] += fluct
    return path


def weight_stats(actions: np.ndarray, hbar: float, n_batches: int = 32,
                 acceptance_rate: float = 1.0) -> list[PathEnsembleStats]:
    """Mean of exp(-action/hbar) per row with batch-means standard errors.

    Weights are rescaled by the row maximum before averaging so that large
    actions do not underflow.
    """
    actions = np.atleast_2d(actions)
    n_rows, n_paths = actions.shape
    log_w = -actions / hbar
    top = np.max(log_w, axis=1)
    finite = np.isfinite(top)
    shift = np.where(finite, top, 0.0)
    w = np.exp(log_w - shift[:, None])
    scale = np.where(finite, np.exp(shift), 0.0)
    mean = w.mean(axis=1)
    nb = min(n_batches, n_paths)
    size = n_paths // nb
    batch = w[:, : nb * size].reshape(n_rows, nb, size).mean(axis=2)
    se = batch.std(axis=1, ddof=1) / math.sqrt(nb)
    var = w.var(axis=1, ddof=1)
    out = []
    for i in range(n_rows):
        if se[i] > 0:
            n_eff = min(float(n_paths), float(var[i] / se[i] ** 2))
        else:
            n_eff = float(n_paths) if finite[i] else 0.0
        out.append(PathEnsembleStats(float(scale[i] * mean[i]), float(scale[i] * se[i]), n_eff, acceptance_rate))
    return out


def check_endpoint_allowed(model: ModelSpec, x) -> np.ndarray:
    x = _endpoint(model, x)
    if is_forbidden(evaluate_potential(model, x)):
        raise ValueError(f"endpoint {x.tolist()} lies in a forbidden region")
    return x


def ensemble_stats(model: ModelSpec, ensemble: FluctuationEnsemble, starts: np.ndarray, ends: np.ndarray,
                   n_batches: int = 32) -> list[PathEnsembleStats]:
    """Potential weights for many endpoint pairs on one fluctuation ensemble."""
    actions = kernels.path_actions(ensemble.paths, np.ascontiguousarray(starts, dtype=float),
                                   np.ascontiguousarray(ends, dtype=float), int(model.kind),
                                   model.kernel_params(), model.time.dt)
    return weight_stats(actions, model.params.hbar, n_batches, ensemble.acceptance_rate)


def measure_potential_weight(model: ModelSpec, x_start, x_end, cfg: SamplerConfig,
                             gen: np.random.Generator | None = None) -> PathEnsembleStats:
    """Estimate <exp(-int V dt / hbar)> over free paths from ``x_start`` to ``x_end``.

    Without an explicit generator the ensemble stream is derived from
    ``cfg.seed`` alone, the same stream a shared matrix build uses.
    """
    a = check_endpoint_allowed(model, x_start)
    b = check_endpoint_allowed(model, x_end)
    if gen is None:
        gen = rng_streams.stream(cfg.seed, rng_streams.ENSEMBLE)
    ens = free_ensemble(model, cfg.n_paths, cfg.method, gen)
    return ensemble_stats(model, ens, a[None], b[None], cfg.n_batches)[0]
