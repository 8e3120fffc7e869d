"""Fixed-algorithm pseudo-random generator for reproducible synthetic scenes.

xorshift64* with the state seeded through one splitmix64 step, implemented in
pure 64-bit integer arithmetic so identical seeds produce identical scenes on
every platform (and in any reimplementation of the same named algorithm).
"""
from __future__ import annotations

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class Xorshift64Star:
    """xorshift64* stream: x ^= x>>12; x ^= x<<25; x ^= x>>27; out = x * 2685821657736338717."""

    def __init__(self, seed: int):
        self._state = splitmix64(seed & _MASK64)
        if self._state == 0:  # xorshift state must be nonzero
            self._state = 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform float in [lo, hi) with 53-bit resolution."""
        u = (self.next_u64() >> 11) * (2.0 ** -53)
        return lo + (hi - lo) * u

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) via the multiply-shift reduction."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def unit_vector(self) -> tuple[float, float, float]:
        """Uniform direction on the sphere (rejection-sampled from the cube)."""
        while True:
            x = self.uniform(-1.0, 1.0)
            y = self.uniform(-1.0, 1.0)
            z = self.uniform(-1.0, 1.0)
            r2 = x * x + y * y + z * z
            if 1e-6 < r2 <= 1.0:
                r = r2 ** 0.5
                return x / r, y / r, z / r
