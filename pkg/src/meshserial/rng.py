"""Portable seeded shuffling.

SplitMix64 (Steele, Lea & Flood) drives an in-place Fisher-Yates shuffle,
so a given seed produces the same permutation on every platform and Python
version. The generator step is::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

all modulo 2**64. The shuffle walks ``i = n-1 .. 1`` and swaps ``a[i]`` with
``a[j]``, ``j = next() % (i + 1)``. The modulo bias is below 2**-40 for any
array that fits in memory and is accepted for simplicity.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)


def shuffled_range(n: int, seed: int) -> np.ndarray:
    """Return ``[0, n)`` permuted by Fisher-Yates under SplitMix64(seed)."""
    rng = SplitMix64(seed)
    a = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.next() % (i + 1)
        a[i], a[j] = a[j], a[i]
    return np.array(a, dtype=np.int64)
