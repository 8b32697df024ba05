"""Counter-based random streams keyed by integer labels.

Every consumer derives its generator from ``(seed, tag, *indices)`` so the
draws never depend on scheduling order or on what else ran before.
"""

import numpy as np

BASIS = 1
ENSEMBLE = 2
ENTRY = 3


def stream(seed: int, *labels: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and any number of integer labels."""
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(v) for v in labels)])
    return np.random.Generator(np.random.Philox(key))
