"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--paths 2000]

Each case runs on identical inputs with both backends, checks that the
outputs agree, and reports the best-of-N wall time and speedup.
"""

import argparse
import sys
import timeit

import numpy as np

from mchamiltonian._core import compiled, fallback
from mchamiltonian.model import ChainSpec, ModelSpec, PhysicalParams, PotentialSpec, TimeWindow


def cases(n_paths, n_slices):
    rng = np.random.default_rng(0)
    harmonic = ModelSpec(PotentialSpec.harmonic(1.0), PhysicalParams(), TimeWindow(2.0, n_slices))
    chain = ModelSpec(ChainSpec(3, 1.0, 2.0), PhysicalParams(), TimeWindow(2.0, n_slices))
    s = n_slices - 1

    z1 = rng.standard_normal((n_paths, s, 1))
    z3 = rng.standard_normal((n_paths, s, 3))
    yield "bridge (P x S x 3)", "bridge_from_normals", (z3, 0.03)

    for label, model, z, n_entries in (("1-D harmonic", harmonic, z1, 32), ("3-osc chain", chain, z3, 32)):
        d = model.dimension
        fluct = fallback.bridge_from_normals(z, model.time.dt)
        starts = rng.standard_normal((n_entries, d))
        ends = rng.standard_normal((n_entries, d))
        args = (fluct, starts, ends, int(model.kind), model.kernel_params(), model.time.dt)
        yield f"path actions, {label} ({n_entries} entries)", "path_actions", args

    a = rng.standard_normal((60, 60))
    yield "jacobi eigh 60 x 60", "jacobi_eigh", (a + a.T,)


def first(result):
    return result[0] if isinstance(result, tuple) else result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--paths", type=int, default=2000)
    parser.add_argument("--slices", type=int, default=64)
    args = parser.parse_args(argv)

    if compiled is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1

    print(f"{'case':<44} {'compiled':>10} {'python':>10} {'speedup':>8}")
    for label, name, call_args in cases(args.paths, args.slices):
        fast, slow = getattr(compiled, name), getattr(fallback, name)
        out_fast, out_slow = first(fast(*call_args)), first(slow(*call_args))
        if name == "jacobi_eigh":
            out_fast, out_slow = np.sort(out_fast), np.sort(out_slow)
        np.testing.assert_allclose(out_fast, out_slow, rtol=1e-10, atol=1e-12)
        t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        print(f"{label:<44} {t_fast:10.4f} {t_slow:10.4f} {t_slow / t_fast:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
