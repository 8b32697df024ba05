"""Effective spectrum from the transition matrix, wave functions, thermodynamics."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from ._core import kernels
from .basis import BasisSet
from .model import PhysicalParams
from .transition import TransitionMatrix

DEGENERACY_RTOL = 1e-8


class SpectrumError(RuntimeError):
    """The transition matrix has no positive eigenvalue."""


def symmetric_eigh(a: np.ndarray, solver: str = "lapack") -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues ascending and orthonormal eigenvectors (columns) of a symmetric matrix."""
    a = np.asarray(a, dtype=float)
    if solver == "lapack":
        return np.linalg.eigh(a)
    if solver == "jacobi":
        w, v, _ = kernels.jacobi_eigh(a)
        order = np.argsort(w, kind="stable")
        return w[order], v[:, order]
    raise ValueError(f"unknown solver {solver!r}")


@dataclass(frozen=True, eq=False)
class EffectiveSpectrum:
    energies: np.ndarray  # (K,) ascending
    eigenvalues: np.ndarray  # (K,) matching transition-matrix eigenvalues
    eigenvectors: np.ndarray  # (N, K) wave-function values on the nodes
    positions: np.ndarray  # (N, D)
    cell_measures: np.ndarray  # (N,)
    n_discarded: int
    lambda_floor: float
    t_total: float
    hbar: float

    def __len__(self) -> int:
        return self.energies.size

    def multiplets(self, rtol: float = DEGENERACY_RTOL) -> list[list[int]]:
        """Groups of state indices whose energies agree to ``rtol``."""
        groups: list[list[int]] = []
        for i, e in enumerate(self.energies):
            if groups and abs(e - self.energies[groups[-1][-1]]) <= rtol * max(abs(e), 1e-300):
                groups[-1].append(i)
            else:
                groups.append([i])
        return groups

    def to_csv(self, exact=None) -> str:
        """Spectrum table; with ``exact`` energies, adds the oracle and relative error columns."""
        buf = io.StringIO()
        if exact is None:
            buf.write("n,E_eff\n")
            for i, e in enumerate(self.energies, 1):
                buf.write(f"{i},{e:.17g}\n")
            return buf.getvalue()
        buf.write("n,E_eff,E_exact,rel_err\n")
        for i, e in enumerate(self.energies, 1):
            if i <= len(exact):
                x = exact[i - 1]
                buf.write(f"{i},{e:.17g},{x:.17g},{(e - x) / x:.17g}\n")
            else:
                buf.write(f"{i},{e:.17g},,\n")
        return buf.getvalue()

    def wavefunctions_csv(self, count: int) -> str:
        count = min(count, len(self))
        d = self.positions.shape[1]
        buf = io.StringIO()
        cols = ["node"] + [f"x{i}" for i in range(d)] + ["cell_measure"] + [f"psi_{k}" for k in range(count)]
        buf.write(",".join(cols) + "\n")
        for i in range(self.positions.shape[0]):
            row = [str(i)] + [f"{v:.17g}" for v in self.positions[i]] + [f"{self.cell_measures[i]:.17g}"]
            row += [f"{self.eigenvectors[i, k]:.17g}" for k in range(count)]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


def eigenvalue_floor(values_max: float, relative_error_level: float, floor_scale: float = 1e-3) -> float:
    """Cutoff below which transition-matrix eigenvalues are treated as noise."""
    return values_max * max(1e-12, floor_scale * relative_error_level)


def diagonalize(matrix: TransitionMatrix, params: PhysicalParams, basis: BasisSet | None = None,
                solver: str = "lapack", floor_scale: float = 1e-3,
                lambda_floor: float | None = None) -> EffectiveSpectrum:
    """Energies E_n = -(hbar/T) ln(lambda_n) from the symmetrized transition matrix.

    Eigenvalues at or below the floor are dropped and counted. Without a
    basis the cell measures are taken as 1.
    """
    m = np.asarray(matrix.values, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError("transition matrix must be square and non-empty")
    n = m.shape[0]
    if basis is not None and len(basis) != n:
        raise ValueError("basis size does not match the matrix")
    sym = 0.5 * (m + m.T)
    lam, u = symmetric_eigh(sym, solver)
    lam = lam[::-1]
    u = u[:, ::-1]
    top = lam[0]
    if not top > 0:
        raise SpectrumError("no positive eigenvalue; matrix is not amplitude-like")
    floor = eigenvalue_floor(top, matrix.relative_error_level, floor_scale) if lambda_floor is None else lambda_floor
    keep = lam > floor
    lam = lam[keep]
    u = u[:, keep]
    if basis is None:
        positions = np.arange(n, dtype=float)[:, None]
        cm = np.ones(n)
    else:
        positions = np.asarray(basis.positions)
        cm = np.asarray(basis.cell_measures)
    psi = u / np.sqrt(cm)[:, None]
    psi /= np.sqrt(np.sum(cm[:, None] * psi * psi, axis=0))
    lead = psi[np.argmax(np.abs(psi), axis=0), np.arange(psi.shape[1])]
    psi *= np.where(lead < 0, -1.0, 1.0)
    energies = -(params.hbar / matrix.t_total) * np.log(lam)
    return EffectiveSpectrum(energies, lam, psi, positions, cm, int(n - keep.sum()), float(floor),
                             matrix.t_total, params.hbar)


def wavefunction(spectrum: EffectiveSpectrum, n: int) -> list[tuple[np.ndarray, float]]:
    if not 0 <= n < len(spectrum):
        raise IndexError(f"state {n} out of range (0..{len(spectrum) - 1})")
    return [(p, float(v)) for p, v in zip(spectrum.positions, spectrum.eigenvectors[:, n])]


def overlap(spectrum: EffectiveSpectrum, a: int, b: int) -> float:
    """<psi_a|psi_b> under the cell measure."""
    cm = spectrum.cell_measures
    return float(np.sum(cm * spectrum.eigenvectors[:, a] * spectrum.eigenvectors[:, b]))


@dataclass(frozen=True, eq=False)
class ThermoCurve:
    beta_grid: np.ndarray
    partition: np.ndarray  # sum exp(-beta (E_n - shift))
    energy: np.ndarray
    specific_heat: np.ndarray
    shift: float
    truncation_weight: np.ndarray  # Boltzmann weight of the highest kept level

    @property
    def log_partition(self) -> np.ndarray:
        """ln Z without the ground-state shift."""
        return np.log(self.partition) - self.beta_grid * self.shift

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("beta,Z_shifted,log_Z,U,C,truncation_weight\n")
        for row in zip(self.beta_grid, self.partition, self.log_partition, self.energy, self.specific_heat,
                       self.truncation_weight):
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def thermodynamics(spectrum, beta_grid) -> ThermoCurve:
    """Canonical Z, U and C = beta^2 Var(E) over the kept levels.

    ``spectrum`` may be an :class:`EffectiveSpectrum` or a plain array of
    energies.
    """
    energies = np.sort(np.asarray(getattr(spectrum, "energies", spectrum), dtype=float))
    if energies.size == 0:
        raise ValueError("empty spectrum")
    beta = np.asarray(beta_grid, dtype=float).reshape(-1)
    if np.any(beta <= 0):
        raise ValueError("beta must be positive")
    shift = energies[0]
    gaps = energies - shift
    w = np.exp(-beta[:, None] * gaps[None, :])
    z = w.sum(axis=1)
    p = w / z[:, None]
    mean_gap = p @ gaps
    var = np.sum(p * (gaps[None, :] - mean_gap[:, None]) ** 2, axis=1)
    return ThermoCurve(beta, z, shift + mean_gap, beta**2 * var, float(shift), p[:, -1])
