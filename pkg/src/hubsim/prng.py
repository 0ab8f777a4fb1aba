"""Deterministic PRNG: xoshiro256** seeded via splitmix64.

Implemented from the published reference algorithms so any runtime can
reproduce the stream bit-for-bit from the same 64-bit seed. The world owns
exactly one stream and consumes it in a fixed phase order each tick.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_TO_UNIT = 2.0 ** -53  # scales a 53-bit integer into [0, 1)


def _splitmix64_next(x: int) -> tuple[int, int]:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return x, (z ^ (z >> 31)) & _MASK


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """64-bit generator with a 256-bit state, seeded from a single integer."""

    __slots__ = ("s0", "s1", "s2", "s3", "draws")

    def __init__(self, seed: int):
        x = seed & _MASK
        x, self.s0 = _splitmix64_next(x)
        x, self.s1 = _splitmix64_next(x)
        x, self.s2 = _splitmix64_next(x)
        x, self.s3 = _splitmix64_next(x)
        self.draws = 0

    def next_u64(self) -> int:
        s1 = self.s1
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        self.s2 ^= self.s0
        self.s3 ^= s1
        self.s1 = s1 ^ self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = _rotl(self.s3, 45)
        self.draws += 1
        return result

    def random(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * _TO_UNIT

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (unbiased)."""
        if n <= 0:
            raise ValueError("randrange needs n > 0")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def state(self) -> tuple[int, int, int, int]:
        return (self.s0, self.s1, self.s2, self.s3)

    def set_state(self, st: tuple[int, int, int, int]) -> None:
        self.s0, self.s1, self.s2, self.s3 = (v & _MASK for v in st)
