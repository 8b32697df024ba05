"""Physical systems: point-particle potentials and the periodic oscillator chain.

Potentials are identified by an integer code shared with the compiled
kernels, so a model can be handed to the hot loop as ``(code, params)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

#: Marker returned for configurations in an infinite-potential region.
FORBIDDEN = math.inf


def is_forbidden(value) -> bool:
    return value == FORBIDDEN


class PotentialKind(enum.IntEnum):
    ZERO = 0
    HARMONIC = 1  # isotropic, any dimension
    SECH_WELL = 2
    ANHARMONIC = 3
    ABS_LINEAR = 4
    WALL_LINEAR = 5
    COUPLED_HARMONIC_2D = 6
    CHAIN = 7


_DIMENSIONS = {
    PotentialKind.SECH_WELL: 1,
    PotentialKind.ANHARMONIC: 1,
    PotentialKind.ABS_LINEAR: 1,
    PotentialKind.WALL_LINEAR: 1,
    PotentialKind.COUPLED_HARMONIC_2D: 2,
}


@dataclass(frozen=True)
class PhysicalParams:
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.hbar > 0):
            raise ValueError(f"mass and hbar must be positive, got {self.mass}, {self.hbar}")


@dataclass(frozen=True)
class TimeWindow:
    t_total: float
    n_slices: int = 64

    def __post_init__(self):
        if not self.t_total > 0:
            raise ValueError(f"t_total must be positive, got {self.t_total}")
        if int(self.n_slices) != self.n_slices or self.n_slices < 2:
            raise ValueError(f"n_slices must be an integer >= 2, got {self.n_slices}")

    @property
    def dt(self) -> float:
        return self.t_total / self.n_slices


@dataclass(frozen=True)
class PotentialSpec:
    """One entry of the potential catalog.

    ``omega`` is used by the harmonic kinds, ``v0`` by the sech well,
    ``force`` by the linear wall and ``coupling`` by the coupled 2-D
    oscillator. Unset constants default to 1.0.
    """

    kind: PotentialKind
    dimension: int = 1
    omega: float = 1.0
    v0: float = 1.0
    force: float = 1.0
    coupling: float = 1.0

    def __post_init__(self):
        kind = PotentialKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is PotentialKind.CHAIN:
            raise ValueError("use ChainSpec for the oscillator chain")
        fixed = _DIMENSIONS.get(kind)
        if fixed is not None and self.dimension != fixed:
            raise ValueError(f"{kind.name} is {fixed}-dimensional, got dimension={self.dimension}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    # Named constructors for the catalog entries.
    @classmethod
    def zero(cls, dimension: int = 1) -> "PotentialSpec":
        return cls(PotentialKind.ZERO, dimension)

    @classmethod
    def harmonic(cls, omega: float = 1.0, dimension: int = 1) -> "PotentialSpec":
        return cls(PotentialKind.HARMONIC, dimension, omega=omega)

    @classmethod
    def sech_well(cls, v0: float = 1.0) -> "PotentialSpec":
        return cls(PotentialKind.SECH_WELL, 1, v0=v0)

    @classmethod
    def anharmonic(cls) -> "PotentialSpec":
        return cls(PotentialKind.ANHARMONIC, 1)

    @classmethod
    def abs_linear(cls) -> "PotentialSpec":
        return cls(PotentialKind.ABS_LINEAR, 1)

    @classmethod
    def wall_linear(cls, force: float = 1.0) -> "PotentialSpec":
        return cls(PotentialKind.WALL_LINEAR, 1, force=force)

    @classmethod
    def coupled_harmonic_2d(cls, omega: float = 1.0, coupling: float = 1.0) -> "PotentialSpec":
        return cls(PotentialKind.COUPLED_HARMONIC_2D, 2, omega=omega, coupling=coupling)


@dataclass(frozen=True)
class ChainSpec:
    n_osc: int
    omega_coupling: float = 1.0
    omega_onsite: float = 1.0
    boundary: str = "periodic"

    def __post_init__(self):
        if int(self.n_osc) != self.n_osc or self.n_osc < 1:
            raise ValueError(f"n_osc must be an integer >= 1, got {self.n_osc}")
        if self.omega_coupling < 0:
            raise ValueError("omega_coupling must be nonnegative")
        if not self.omega_onsite > 0:
            raise ValueError("omega_onsite must be positive (mass gap)")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")


@dataclass(frozen=True)
class ModelSpec:
    geometry: Union[PotentialSpec, ChainSpec]
    params: PhysicalParams = field(default_factory=PhysicalParams)
    time: TimeWindow = field(default_factory=lambda: TimeWindow(1.0))

    @property
    def dimension(self) -> int:
        if isinstance(self.geometry, ChainSpec):
            return self.geometry.n_osc
        return self.geometry.dimension

    @property
    def is_chain(self) -> bool:
        return isinstance(self.geometry, ChainSpec)

    @property
    def kind(self) -> PotentialKind:
        return PotentialKind.CHAIN if self.is_chain else self.geometry.kind

    def kernel_params(self) -> np.ndarray:
        """Flat parameter vector understood by the compiled potential."""
        g = self.geometry
        m = self.params.mass
        if self.is_chain:
            return np.array([m, g.omega_coupling, g.omega_onsite])
        kind = g.kind
        if kind is PotentialKind.HARMONIC:
            return np.array([m, g.omega])
        if kind is PotentialKind.SECH_WELL:
            return np.array([m, g.v0])
        if kind is PotentialKind.WALL_LINEAR:
            return np.array([m, g.force])
        if kind is PotentialKind.COUPLED_HARMONIC_2D:
            return np.array([m, g.omega, g.coupling])
        return np.array([m])

    def with_time(self, time: TimeWindow) -> "ModelSpec":
        return ModelSpec(self.geometry, self.params, time)


def potential_array(kind: int, params: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Vectorized potential over the last axis of ``x``; forbidden points give +inf."""
    kind = PotentialKind(kind)
    x = np.asarray(x, dtype=float)
    m = params[0]
    if kind is PotentialKind.ZERO:
        return np.zeros(x.shape[:-1])
    if kind is PotentialKind.HARMONIC:
        return 0.5 * m * params[1] ** 2 * np.sum(x * x, axis=-1)
    if kind is PotentialKind.SECH_WELL:
        return -params[1] / np.cosh(x[..., 0]) ** 2
    if kind is PotentialKind.ANHARMONIC:
        q = x[..., 0] ** 2
        return 0.5 * q + 0.25 * q * q
    if kind is PotentialKind.ABS_LINEAR:
        return 0.5 * np.abs(x[..., 0])
    if kind is PotentialKind.WALL_LINEAR:
        q = x[..., 0]
        with np.errstate(invalid="ignore"):
            return np.where(q < 0, np.inf, params[1] * q)
    if kind is PotentialKind.COUPLED_HARMONIC_2D:
        return 0.5 * m * params[1] ** 2 * (x[..., 0] ** 2 + x[..., 1] ** 2) + params[2] * x[..., 0] * x[..., 1]
    # periodic chain
    diff = x - np.roll(x, -1, axis=-1)
    return 0.5 * (params[1] ** 2 * np.sum(diff * diff, axis=-1) + params[2] ** 2 * np.sum(x * x, axis=-1))


def _check_config(model: ModelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.dimension:
        raise ValueError(f"configuration must have length {model.dimension}, got shape {x.shape}")
    return x


def evaluate_potential(model: ModelSpec, x) -> float:
    """V(x) for one configuration; :data:`FORBIDDEN` inside an infinite wall."""
    x = _check_config(model, x)
    return float(potential_array(model.kind, model.kernel_params(), x))


def kinetic_action(model: ModelSpec, path) -> float:
    """Discrete free action sum_k (m/2)|x_{k+1}-x_k|^2 / dt over the time slices."""
    path = np.asarray(path, dtype=float)
    n = model.time.n_slices
    if path.ndim == 1 and model.dimension == 1:
        path = path[:, None]
    if path.shape != (n + 1, model.dimension):
        raise ValueError(f"path must have shape ({n + 1}, {model.dimension}), got {path.shape}")
    step = np.diff(path, axis=0)
    return float(0.5 * model.params.mass * np.sum(step * step) / model.time.dt)
