"""Deterministic 64-bit pseudo-random stream (splitmix64).

Every stochastic component of the package (dataset sampling, train/test
shuffles, bootstrap draws, search multistarts) draws from this generator so
that results are reproducible bit-for-bit across platforms and library
versions. The algorithm is Steele/Lea/Flood's splitmix64 finalizer applied
to a Weyl sequence.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_WEYL = 0x9E3779B97F4A7C15
_DOUBLE_SCALE = 1.0 / (1 << 53)


def _mix(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Stateful splitmix64 stream seeded with a 64-bit integer."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._seed = seed & _MASK64

    @property
    def seed(self) -> int:
        return self._seed

    def next_u64(self) -> int:
        self._state = (self._state + _WEYL) & _MASK64
        return _mix(self._state)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform double in [lo, hi) with 53-bit resolution."""
        u = (self.next_u64() >> 11) * _DOUBLE_SCALE
        return lo + (hi - lo) * u

    def uniform_open_low(self, lo: float, hi: float) -> float:
        """Uniform double in (lo, hi]; the low endpoint is excluded."""
        u = (self.next_u64() >> 11) * _DOUBLE_SCALE
        return hi - (hi - lo) * u

    def randint(self, n: int) -> int:
        """Integer in [0, n) via multiply-shift (no rejection, tiny bias)."""
        if n <= 0:
            raise ValueError("randint needs n >= 1")
        return (self.next_u64() * n) >> 64

    def shuffle(self, seq: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randint(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def spawn(self, key: int) -> "SplitMix64":
        """Independent substream derived from the original seed and a key.

        Substreams depend only on (seed, key), never on how much of the
        parent stream was consumed, so parallel work can be re-ordered
        freely without changing results.
        """
        return SplitMix64(_mix(self._seed ^ _mix((key + 1) * _WEYL)))
