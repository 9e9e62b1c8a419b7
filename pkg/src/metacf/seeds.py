"""Deterministic child-seed derivation.

Everything random in this package flows from explicit integer seeds.  Nested
work units (sweep cells, matrix cells, CV folds) get their own streams via a
splittable counter-based hash, so results are reproducible regardless of
execution order or parallelism.
"""

from __future__ import annotations

import numpy as np

_SEED_MASK = (1 << 64) - 1


def normalize_seed(seed: int) -> int:
    """Map an arbitrary integer onto the unsigned 64-bit seed domain."""
    return int(seed) & _SEED_MASK


def child_seed(master_seed: int, *key: int) -> int:
    """Derive a 64-bit child seed from a master seed and an index path.

    Uses ``numpy.random.SeedSequence`` spawn keys, whose hashing is stable
    across numpy versions and platforms.
    """
    ss = np.random.SeedSequence(
        entropy=normalize_seed(master_seed),
        spawn_key=tuple(int(k) for k in key),
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])
