import math

import numpy as np
import pytest

from mchamiltonian.basis import build_regular_basis, build_stochastic_basis
from mchamiltonian.model import ModelSpec, PhysicalParams, PotentialSpec, TimeWindow
from mchamiltonian.oracle import exact_kernel
from mchamiltonian.sampler import SamplerConfig
from mchamiltonian.transition import TransitionMatrix, amplitude, build_matrix, free_kernel

P = PhysicalParams()


class TestFreeKernel:
    def test_coincident_points(self):
        assert free_kernel(P, 1, [0.3], [0.3], 2.0) == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-15)
        assert free_kernel(P, 1, [0.3], [0.3], 2.0) == pytest.approx(0.2820948, abs=1e-7)

    def test_factorizes(self):
        a, b = np.array([0.1, -0.4]), np.array([1.0, 0.5])
        two = free_kernel(P, 2, a, b, 1.5)
        one = free_kernel(P, 1, a[:1], b[:1], 1.5) * free_kernel(P, 1, a[1:], b[1:], 1.5)
        assert two == pytest.approx(one, rel=1e-14)

    def test_mass_and_hbar(self):
        p = PhysicalParams(mass=2.0, hbar=0.5)
        c = 2.0 / (0.5 * 3.0)
        assert free_kernel(p, 1, [0.0], [1.0], 3.0) == pytest.approx(math.sqrt(c / (2 * math.pi)) * math.exp(-c / 2))

    def test_time_must_be_positive(self):
        with pytest.raises(ValueError):
            free_kernel(P, 1, [0.0], [0.0], 0.0)


class TestAmplitude:
    def test_free(self, free_1d):
        v, e = amplitude(free_1d, [0.2], [1.1], SamplerConfig(n_paths=64))
        assert v == free_kernel(P, 1, [0.2], [1.1], 2.0)
        assert e == 0.0

    def test_harmonic_matches_mehler(self, harmonic_1d):
        v, e = amplitude(harmonic_1d, [0.0], [0.0], SamplerConfig(n_paths=10_000, seed=3))
        exact = exact_kernel("harmonic", P, 1, [0.0], [0.0], 2.0, omega=1.0)
        assert abs(v - exact) < 3 * e

    def test_symmetric(self, harmonic_1d):
        a = amplitude(harmonic_1d, [0.8], [-0.4], SamplerConfig(n_paths=8000, seed=1))
        b = amplitude(harmonic_1d, [-0.4], [0.8], SamplerConfig(n_paths=8000, seed=2))
        assert abs(a[0] - b[0]) < 3 * math.hypot(a[1], b[1])


class TestBuildMatrix:
    def test_single_cell_free(self, free_1d):
        basis = build_regular_basis(1, 1, 0.0, 1.0)
        m = build_matrix(free_1d, basis, SamplerConfig(n_paths=16))
        assert m.values.shape == (1, 1)
        assert m.values[0, 0] == free_kernel(P, 1, [0.0], [0.0], 2.0)

    def test_free_two_cells_closed_form(self, free_1d):
        basis = build_regular_basis(1, 2, -1.0, 1.0)  # nodes -1, 0; dx = 1
        m = build_matrix(free_1d, basis, SamplerConfig(n_paths=16))
        diag = 1 / math.sqrt(4 * math.pi)
        off = diag * math.exp(-1 / 4)
        np.testing.assert_allclose(m.values, [[diag, off], [off, diag]], rtol=1e-14)
        np.testing.assert_array_equal(m.errors, 0.0)

    def test_chain_entries_positive(self, chain3):
        basis = build_stochastic_basis(3, 12, 0.7, seed=2)
        m = build_matrix(chain3, basis, SamplerConfig(n_paths=200))
        assert np.all(m.values > 0)
        assert np.all(np.isfinite(m.values))
        np.testing.assert_array_equal(m.values, m.values.T)

    @pytest.mark.parametrize("streams", ["shared", "per_entry"])
    def test_unsymmetrized_asymmetry_within_errors(self, streams):
        model = ModelSpec(PotentialSpec.harmonic(1.0), P, TimeWindow(2.0, 32))
        basis = build_regular_basis(1, 8, -2.0, 2.0)
        m = build_matrix(model, basis, SamplerConfig(n_paths=2000, streams=streams), symmetric_fill=False)
        combined = np.sqrt(m.errors**2 + m.errors.T**2)
        assert np.max(np.abs(m.values - m.values.T)) <= 5 * np.max(combined)
        assert m.asymmetry > 0

    def test_uniform_measure_scaling(self, harmonic_1d):
        basis = build_regular_basis(1, 6, -2.0, 2.0)
        cfg = SamplerConfig(n_paths=300)
        a = build_matrix(harmonic_1d, basis, cfg)
        b = build_matrix(harmonic_1d, basis.rescaled(3.5), cfg)
        np.testing.assert_allclose(b.values, 3.5 * a.values, rtol=1e-14)

    def test_free_entries_decay_with_separation(self, free_1d):
        basis = build_regular_basis(1, 10, -3.0, 3.0)
        m = build_matrix(free_1d, basis, SamplerConfig(n_paths=16))
        row = m.values[0]
        assert np.all(np.diff(row) < 0)

    def test_independent_of_thread_count(self, harmonic_1d):
        basis = build_regular_basis(1, 12, -3.0, 3.0)
        for streams in ("shared", "per_entry"):
            cfg = SamplerConfig(n_paths=4000, streams=streams)
            one = build_matrix(harmonic_1d, basis, cfg, threads=1)
            four = build_matrix(harmonic_1d, basis, cfg, threads=4)
            np.testing.assert_array_equal(one.values, four.values)
            np.testing.assert_array_equal(one.errors, four.errors)

    def test_dimension_mismatch(self, harmonic_1d):
        with pytest.raises(ValueError):
            build_matrix(harmonic_1d, build_regular_basis(2, 2, -1, 1), SamplerConfig())

    def test_flags_noisy_entries(self):
        m = TransitionMatrix(np.array([[1.0, 0.1], [0.1, 1.0]]), np.array([[0.01, 0.2], [0.2, 0.01]]), 1.0)
        np.testing.assert_array_equal(m.flagged, [[False, True], [True, False]])


class TestSerialization:
    def matrix(self):
        rng = np.random.default_rng(0)
        return TransitionMatrix(rng.random((5, 5)), rng.random((5, 5)) * 1e-3, 2.0, "abc", seed=2**63 + 5)

    def test_binary_round_trip(self):
        m = self.matrix()
        data = m.to_bytes()
        assert data[:8] == b"MCHMAT01"
        assert len(data) == 8 + 8 + 8 + 8 + 2 * 25 * 8
        back = TransitionMatrix.from_bytes(data)
        np.testing.assert_array_equal(back.values, m.values)
        np.testing.assert_array_equal(back.errors, m.errors)
        assert back.t_total == 2.0 and back.seed == m.seed

    def test_bad_magic(self):
        with pytest.raises(ValueError):
            TransitionMatrix.from_bytes(b"XXXXXXXX" + bytes(24))

    def test_csv(self):
        text = self.matrix().to_csv().splitlines()
        assert text[0] == "row,col,value,error"
        assert len(text) == 26
        i, j, v, e = text[7].split(",")
        assert (i, j) == ("1", "1") and float(v) == self.matrix().values[1, 1]
