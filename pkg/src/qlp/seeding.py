"""Seed derivation shared by every sampling routine.

All randomness comes from numpy's PCG64 bit generator. Sub-seeds are derived
from a parent seed plus integer keys through ``numpy.random.SeedSequence``,
whose hashing is fixed and platform independent, so a single top-level seed
reproduces every histogram bit for bit.
"""

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(seed: int, *keys: int) -> int:
    """Return a 64-bit sub-seed for ``(seed, *keys)``."""
    entropy = [int(seed) & SEED_MASK, *(int(k) & SEED_MASK for k in keys)]
    words = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.Generator(np.random.PCG64(int(seed) & SEED_MASK))
