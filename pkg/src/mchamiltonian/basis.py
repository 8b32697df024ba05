"""Position-space box bases: regular grids and Gaussian-sampled (stochastic) nodes.

Each node carries a cell measure, the volume its box function covers. For
stochastic nodes the measure is the importance weight 1 / (N * P(x_n)), so
that sum_n measure_n f(x_n) is an unbiased estimate of the integral of f.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import rng as rng_streams
from .model import ModelSpec, PotentialKind


@dataclass(frozen=True)
class BasisNode:
    position: np.ndarray
    cell_measure: float


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Immutable node table.

    ``keys`` identify nodes independently of their order; matrix builds key
    their random streams and path orientation on them.
    """

    positions: np.ndarray  # (N, D)
    cell_measures: np.ndarray  # (N,)
    kind: str  # "regular" or "stochastic"
    keys: np.ndarray | None = None
    box_low: np.ndarray | None = None
    box_high: np.ndarray | None = None
    sigma: np.ndarray | None = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        cm = np.asarray(self.cell_measures, dtype=float).reshape(-1)
        if pos.shape[0] < 1 or pos.shape[0] != cm.shape[0]:
            raise ValueError("need at least one node and one measure per node")
        if not np.all(cm > 0):
            raise ValueError("cell measures must be positive")
        keys = np.arange(pos.shape[0]) if self.keys is None else np.asarray(self.keys, dtype=np.int64)
        if keys.shape != (pos.shape[0],) or len(np.unique(keys)) != keys.size:
            raise ValueError("node keys must be unique, one per node")
        for name, value in (("positions", pos), ("cell_measures", cm), ("keys", keys)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    @property
    def nodes(self) -> list[BasisNode]:
        return [BasisNode(p, float(c)) for p, c in zip(self.positions, self.cell_measures)]

    def __iter__(self) -> Iterator[BasisNode]:
        return iter(self.nodes)

    def permuted(self, order) -> "BasisSet":
        order = np.asarray(order)
        return BasisSet(self.positions[order], self.cell_measures[order], self.kind, self.keys[order],
                        self.box_low, self.box_high, self.sigma)

    def rescaled(self, factor: float) -> "BasisSet":
        return BasisSet(self.positions, self.cell_measures * factor, self.kind, self.keys,
                        self.box_low, self.box_high, self.sigma)

    def to_text(self) -> str:
        """Tab-separated audit table: index, key, coordinates, cell measure."""
        buf = io.StringIO()
        cols = ["index", "key"] + [f"x{i}" for i in range(self.dimension)] + ["cell_measure"]
        buf.write(f"# kind={self.kind}\n")
        buf.write("\t".join(cols) + "\n")
        for i, (k, p, c) in enumerate(zip(self.keys, self.positions, self.cell_measures)):
            row = [str(i), str(int(k))] + [repr(float(v)) for v in p] + [repr(float(c))]
            buf.write("\t".join(row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "BasisSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        kind = "regular"
        if lines[0].startswith("#"):
            kind = lines[0].split("kind=", 1)[1].strip()
            lines = lines[1:]
        rows = [ln.split("\t") for ln in lines[1:]]
        keys = np.array([int(r[1]) for r in rows])
        pos = np.array([[float(v) for v in r[2:-1]] for r in rows])
        cm = np.array([float(r[-1]) for r in rows])
        return cls(pos, cm, kind, keys)


def build_regular_basis(dimension: int, per_axis_counts, box_low, box_high) -> BasisSet:
    """Tensor grid with nodes at the lower corner of each cell."""
    counts = np.broadcast_to(np.asarray(per_axis_counts, dtype=int), (dimension,))
    low = np.broadcast_to(np.asarray(box_low, dtype=float), (dimension,)).copy()
    high = np.broadcast_to(np.asarray(box_high, dtype=float), (dimension,)).copy()
    if np.any(counts < 1):
        raise ValueError("per-axis counts must be >= 1")
    if not np.all(low < high):
        raise ValueError(f"degenerate box: low={low.tolist()} high={high.tolist()}")
    width = (high - low) / counts
    axes = [low[i] + width[i] * np.arange(counts[i]) for i in range(dimension)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dimension)
    cm = np.full(grid.shape[0], float(np.prod(width)))
    return BasisSet(grid, cm, "regular", box_low=low, box_high=high)


def stochastic_sigma(model: ModelSpec, t_prime: float | None = None, width: str = "sinh") -> tuple[np.ndarray, bool]:
    """Per-coordinate width of the Gaussian node distribution.

    Free particle: sqrt(hbar t'/m). Harmonic oscillator: ``width="sinh"``
    gives sqrt(hbar sinh(w t')/(m w)); ``width="amplitude"`` gives
    sqrt(hbar tanh(w t')/(m w)), the width of the oscillator amplitude
    <x, t'|0, 0> itself. The chain uses the uncoupled on-site oscillator at
    t' = T for every coordinate.

    Returns ``(sigma, fallback)``; ``fallback`` is True when the potential
    has no rule and the free width was used.
    """
    if width not in ("sinh", "amplitude"):
        raise ValueError(f"unknown width rule {width!r}")
    hbar = model.params.hbar
    m = model.params.mass
    d = model.dimension
    t_prime = model.time.t_total if t_prime is None else t_prime
    if model.is_chain:
        omega = model.geometry.omega_onsite
    elif model.kind in (PotentialKind.HARMONIC, PotentialKind.COUPLED_HARMONIC_2D):
        omega = model.geometry.omega
    else:
        omega = None
    if not t_prime > 0:
        raise ValueError("t_prime must be positive")
    fallback = False
    if omega is None:
        if model.kind is not PotentialKind.ZERO:
            fallback = True
            warnings.warn(f"no sigma rule for {model.kind.name}; using the free-particle width", stacklevel=2)
        s = math.sqrt(hbar * t_prime / m)
    elif width == "sinh":
        s = math.sqrt(hbar * math.sinh(omega * t_prime) / (m * omega))
    else:
        s = math.sqrt(hbar * math.tanh(omega * t_prime) / (m * omega))
    return np.full(d, s), fallback


def gaussian_density(x: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Product Gaussian density (zero mean) at each row of ``x``."""
    x = np.atleast_2d(x)
    sigma = np.asarray(sigma, dtype=float)
    z = x / sigma
    norm = np.prod(math.sqrt(2 * math.pi) * sigma)
    return np.exp(-0.5 * np.sum(z * z, axis=1)) / norm


def build_stochastic_basis(dimension: int, n_nodes: int, sigma, seed: int) -> BasisSet:
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (dimension,)).copy()
    if not np.all(sigma > 0):
        raise ValueError("sigma must be positive")
    gen = rng_streams.stream(seed, rng_streams.BASIS)
    pos = gen.standard_normal((n_nodes, dimension)) * sigma
    cm = 1.0 / (n_nodes * gaussian_density(pos, sigma))
    return BasisSet(pos, cm, "stochastic", sigma=sigma)

