"""SplitMix64, vectorized over numpy ``uint64``.

The k-th output (k = 1, 2, ...) of a stream seeded with ``s`` is
``mix(s + k * 0x9E3779B97F4A7C15 mod 2**64)`` where ``mix`` is

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

with wrap-around multiplication.  Uniform doubles are ``(out >> 11) * 2**-53``.
The stream is counter based, so any block can be regenerated independently.
"""

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * M1
        z = (z ^ (z >> np.uint64(27))) * M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Sequential SplitMix64 stream with vectorized block draws."""

    def __init__(self, seed=0):
        self.seed = np.uint64(int(seed) & MASK64)
        self.counter = 0

    def next_u64(self, size):
        k = np.arange(self.counter + 1, self.counter + 1 + size, dtype=np.uint64)
        self.counter += size
        with np.errstate(over="ignore"):
            return mix64(self.seed + k * GAMMA)

    def uniform(self, size):
        """``size`` doubles in ``[0, 1)`` with 53 random bits each."""
        return (self.next_u64(size) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def split(self):
        """Independent child stream seeded from the next output."""
        return SplitMix64(int(self.next_u64(1)[0]))
