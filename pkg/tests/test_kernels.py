"""Compiled kernels against their numpy twins."""

import subprocess
import sys

import numpy as np
import pytest

from mchamiltonian._core import compiled, fallback
from mchamiltonian.model import ChainSpec, ModelSpec, PhysicalParams, PotentialKind, PotentialSpec, TimeWindow

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")

CASES = [
    (PotentialSpec.zero(), 1),
    (PotentialSpec.harmonic(1.3, dimension=2), 2),
    (PotentialSpec.sech_well(), 1),
    (PotentialSpec.anharmonic(), 1),
    (PotentialSpec.abs_linear(), 1),
    (PotentialSpec.wall_linear(0.7), 1),
    (PotentialSpec.coupled_harmonic_2d(1.0, 0.4), 2),
    (ChainSpec(4, 1.0, 2.0), 4),
]


def model_for(geom):
    return ModelSpec(geom, PhysicalParams(mass=1.5), TimeWindow(2.0, 12))


@needs_ext
@pytest.mark.parametrize("geom,d", CASES)
def test_potential_values(geom, d):
    m = model_for(geom)
    x = np.random.default_rng(0).standard_normal((50, d))
    a = compiled.potential_values(int(m.kind), m.kernel_params(), x)
    b = fallback.potential_values(int(m.kind), m.kernel_params(), x)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)


@needs_ext
def test_bridge_from_normals():
    z = np.random.default_rng(1).standard_normal((20, 11, 3))
    np.testing.assert_allclose(compiled.bridge_from_normals(z, 0.3), fallback.bridge_from_normals(z, 0.3),
                               rtol=1e-14, atol=1e-15)


@needs_ext
@pytest.mark.parametrize("geom,d", CASES)
def test_path_actions(geom, d):
    m = model_for(geom)
    rng = np.random.default_rng(2)
    fluct = 0.4 * rng.standard_normal((30, 11, d))
    starts = np.abs(rng.standard_normal((5, d)))
    ends = np.abs(rng.standard_normal((5, d)))
    a = compiled.path_actions(fluct, starts, ends, int(m.kind), m.kernel_params(), 0.1)
    b = fallback.path_actions(fluct, starts, ends, int(m.kind), m.kernel_params(), 0.1)
    assert a.shape == (5, 30)
    np.testing.assert_array_equal(np.isinf(a), np.isinf(b))
    fin = np.isfinite(b)
    np.testing.assert_allclose(a[fin], b[fin], rtol=1e-12)
    if m.kind is PotentialKind.WALL_LINEAR:
        assert np.isinf(b).any()


@needs_ext
@pytest.mark.parametrize("n", [1, 2, 7, 30])
def test_jacobi(n):
    a = np.random.default_rng(n).standard_normal((n, n))
    a = a + a.T
    wa, va, _ = compiled.jacobi_eigh(a)
    wb, vb, _ = fallback.jacobi_eigh(a)
    np.testing.assert_allclose(np.sort(wa), np.sort(wb), atol=1e-12)
    for w, v in ((wa, va), (wb, vb)):
        np.testing.assert_allclose(a @ v, v * w, atol=1e-10)


def test_fallback_is_selectable():
    code = "import mchamiltonian; print(mchamiltonian.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"MCHAM_BACKEND": "python", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
