"""Effective Hamiltonians from path-integral Monte Carlo transition amplitudes."""

from ._core import BACKEND
from .basis import BasisSet, build_regular_basis, build_stochastic_basis, stochastic_sigma
from .model import (
    FORBIDDEN,
    ChainSpec,
    ModelSpec,
    PhysicalParams,
    PotentialKind,
    PotentialSpec,
    TimeWindow,
    evaluate_potential,
    kinetic_action,
)
from .sampler import BrownianBridge, Metropolis, PathEnsembleStats, SamplerConfig, measure_potential_weight
from .spectral import EffectiveSpectrum, ThermoCurve, diagonalize, thermodynamics, wavefunction
from .transition import TransitionMatrix, amplitude, build_matrix, free_kernel

__version__ = "0.1.0"
