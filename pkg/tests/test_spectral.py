import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mchamiltonian.basis import build_regular_basis, build_stochastic_basis
from mchamiltonian.model import PhysicalParams
from mchamiltonian.oracle import bisection_eigenvalues, exact_kernel
from mchamiltonian.sampler import SamplerConfig
from mchamiltonian.spectral import (
    SpectrumError,
    diagonalize,
    overlap,
    symmetric_eigh,
    thermodynamics,
    wavefunction,
)
from mchamiltonian.transition import TransitionMatrix, build_matrix

P = PhysicalParams()


def exact_matrix(basis, t_total=2.0, omega=1.0):
    """Mehler-kernel transition matrix, no sampling noise."""
    x = basis.positions[:, 0]
    cm = basis.cell_measures
    k = np.array([[exact_kernel("harmonic", P, 1, [a], [b], t_total, omega) for b in x] for a in x])
    vals = np.sqrt(np.outer(cm, cm)) * k
    return TransitionMatrix(vals, np.zeros_like(vals), t_total)


def matrix(values, t_total=2.0):
    values = np.asarray(values, dtype=float)
    return TransitionMatrix(values, np.zeros_like(values), t_total)


class TestSmallExamples:
    def test_single_entry(self):
        s = diagonalize(matrix([[math.exp(-2.0)]]), P)
        assert s.energies[0] == pytest.approx(1.0, rel=1e-15)

    def test_diagonal(self):
        s = diagonalize(matrix(np.diag([math.exp(-6.0), math.exp(-2.0)])), P)
        np.testing.assert_allclose(s.energies, [1.0, 3.0], rtol=1e-14)

    def test_hbar_and_time_scaling(self):
        s = diagonalize(matrix([[math.exp(-3.0)]], t_total=1.5), PhysicalParams(hbar=0.5))
        assert s.energies[0] == pytest.approx(0.5 * 3.0 / 1.5)

    def test_no_positive_eigenvalue(self):
        with pytest.raises(SpectrumError):
            diagonalize(matrix([[-1.0, 0.0], [0.0, -2.0]]), P)
        with pytest.raises(SpectrumError):
            diagonalize(matrix([[0.0]]), P)

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            diagonalize(TransitionMatrix(np.zeros((0, 0)), np.zeros((0, 0)), 1.0), P)


def random_symmetric(rng, n):
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)


class TestEigensolvers:
    @pytest.mark.parametrize("solver", ["lapack", "jacobi"])
    @pytest.mark.parametrize("n", [1, 2, 5, 17])
    def test_reconstruction_and_orthonormality(self, solver, n):
        a = random_symmetric(np.random.default_rng(n), n)
        w, v = symmetric_eigh(a, solver)
        np.testing.assert_allclose(v @ np.diag(w) @ v.T, a, atol=1e-10)
        np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-12)
        assert np.all(np.diff(w) >= 0)

    @pytest.mark.parametrize("solver", ["lapack", "jacobi"])
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_matches_bisection(self, solver, seed, n):
        a = random_symmetric(np.random.default_rng(seed), n)
        w, _ = symmetric_eigh(a, solver)
        np.testing.assert_allclose(w, bisection_eigenvalues(a), atol=1e-9)

    def test_solvers_agree_on_transition_matrix(self):
        m = exact_matrix(build_regular_basis(1, 24, -5.0, 5.0))
        a = diagonalize(m, P, solver="lapack")
        b = diagonalize(m, P, solver="jacobi")
        np.testing.assert_allclose(a.energies[:8], b.energies[:8], rtol=1e-9)

    def test_unknown_solver(self):
        with pytest.raises(ValueError):
            symmetric_eigh(np.eye(2), "qr")


class TestInvariances:
    def test_permutation(self, harmonic_1d):
        basis = build_stochastic_basis(1, 20, 1.5, seed=11)
        cfg = SamplerConfig(n_paths=500)
        order = np.random.default_rng(3).permutation(20)
        a = diagonalize(build_matrix(harmonic_1d, basis, cfg), P, basis)
        b = diagonalize(build_matrix(harmonic_1d, basis.permuted(order), cfg), P, basis.permuted(order))
        np.testing.assert_allclose(a.energies, b.energies, rtol=1e-12)

    @pytest.mark.parametrize("c", [0.25, 3.0])
    def test_measure_rescale_shifts_levels(self, c):
        basis = build_regular_basis(1, 16, -4.0, 4.0)
        a = diagonalize(exact_matrix(basis), P, basis)
        b = diagonalize(exact_matrix(basis.rescaled(c)), P, basis.rescaled(c))
        k = 8  # levels well above round-off
        np.testing.assert_allclose(b.energies[:k] - a.energies[:k], -math.log(c) / 2.0, atol=1e-12)
        np.testing.assert_allclose(np.diff(b.energies[:k]), np.diff(a.energies[:k]), atol=1e-12)

    def test_floor_is_monotone(self):
        m = exact_matrix(build_regular_basis(1, 20, -5.0, 5.0))
        kept = [len(diagonalize(m, P, lambda_floor=f)) for f in (1e-14, 1e-8, 1e-4, 1e-2)]
        assert kept == sorted(kept, reverse=True)
        assert kept[0] > kept[-1]

    def test_floor_counts_discards(self):
        s = diagonalize(matrix(np.diag([1.0, 1e-3, 1e-9])), P, lambda_floor=1e-6)
        assert len(s) == 2 and s.n_discarded == 1


@pytest.fixture(scope="module")
def spectrum():
    basis = build_regular_basis(1, 40, -6.0, 6.0)
    return diagonalize(exact_matrix(basis), P, basis)


class TestWavefunctions:
    def test_harmonic_levels(self, spectrum):
        np.testing.assert_allclose(spectrum.energies[:3], [0.5, 1.5, 2.5], rtol=5e-3)

    def test_ground_state_nodeless(self, spectrum):
        psi = spectrum.eigenvectors[:, 0]
        significant = np.abs(psi) > 1e-6 * np.abs(psi).max()
        assert np.all(psi[significant] > 0)

    def test_first_excited_one_node(self, spectrum):
        psi = spectrum.eigenvectors[:, 1]
        sig = psi[np.abs(psi) > 1e-6 * np.abs(psi).max()]
        assert np.count_nonzero(np.diff(np.sign(sig))) == 1

    def test_orthonormal_under_cell_measure(self, spectrum):
        for a in range(4):
            for b in range(4):
                assert overlap(spectrum, a, b) == pytest.approx(float(a == b), abs=1e-10)

    def test_wavefunction_pairs(self, spectrum):
        pairs = wavefunction(spectrum, 0)
        assert len(pairs) == 40
        with pytest.raises(IndexError):
            wavefunction(spectrum, len(spectrum))

    def test_csv_outputs(self, spectrum):
        lines = spectrum.to_csv([0.5, 1.5]).splitlines()
        assert lines[0] == "n,E_eff,E_exact,rel_err"
        assert lines[3].endswith(",,")
        head = spectrum.wavefunctions_csv(2).splitlines()[0]
        assert head == "node,x0,cell_measure,psi_0,psi_1"

    def test_degenerate_multiplets(self):
        s = diagonalize(matrix(np.diag([0.5, 0.5, 0.1])), P)
        assert s.multiplets() == [[0, 1], [2]]


class TestThermodynamics:
    def test_two_level(self):
        th = thermodynamics(np.array([0.0, 1.0]), [math.log(2.0)])
        assert th.partition[0] == pytest.approx(1.5)
        assert th.energy[0] == pytest.approx(1 / 3)
        assert th.log_partition[0] == pytest.approx(math.log(1.5))

    def test_low_temperature_limit(self):
        th = thermodynamics(np.array([0.7, 1.9, 3.0]), [200.0])
        assert th.energy[0] == pytest.approx(0.7, abs=1e-12)
        assert th.specific_heat[0] == pytest.approx(0.0, abs=1e-12)

    def test_harmonic_oscillator(self):
        e = 0.5 + np.arange(20)
        betas = np.array([1.0, 2.0, 4.0])
        th = thermodynamics(e, betas)
        u = 0.5 / np.tanh(betas / 2)
        c = (betas / 2) ** 2 / np.sinh(betas / 2) ** 2
        np.testing.assert_allclose(th.energy, u, rtol=1e-6)
        np.testing.assert_allclose(th.specific_heat, c, rtol=1e-6)

    @given(st.lists(st.floats(-5, 50), min_size=1, max_size=30))
    def test_energy_decreases_and_heat_nonnegative(self, levels):
        th = thermodynamics(np.array(levels), np.geomspace(0.01, 100, 40))
        assert np.all(np.diff(th.energy) <= 1e-9 * (1 + np.abs(th.energy[1:])))
        assert np.all(th.specific_heat >= 0)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            thermodynamics(np.array([]), [1.0])
        with pytest.raises(ValueError):
            thermodynamics(np.array([1.0]), [0.0])

    def test_csv(self):
        text = thermodynamics(np.array([0.0, 1.0]), [1.0, 2.0]).to_csv().splitlines()
        assert text[0] == "beta,Z_shifted,log_Z,U,C,truncation_weight"
        assert len(text) == 3
