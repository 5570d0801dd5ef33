"""SplitMix64: a tiny seedable 64-bit generator with published reference outputs.

Seeded with 1234567 the first outputs are 6457827717110365317,
3203168211198807973, 9817491932198370423, ...
"""

from __future__ import annotations

from fractions import Fraction

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound), unbiased (Lemire's rejection method)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        m = self.next_u64() * bound
        low = m & MASK64
        if low < bound:
            threshold = ((1 << 64) - bound) % bound
            while low < threshold:
                m = self.next_u64() * bound
                low = m & MASK64
        return m >> 64

    def bernoulli(self, p: Fraction) -> bool:
        """True with probability ceil(p * 2**64) / 2**64 (bias below 2**-64)."""
        return self.next_u64() * p.denominator < p.numerator << 64

    def spawn(self, count: int) -> list[int]:
        """Seeds for ``count`` child streams, one per output of this generator."""
        return [self.next_u64() for _ in range(count)]


def stream_seeds(seed: int, workers: int) -> list[int]:
    """Seed of worker stream i is the i-th output of SplitMix64(seed)."""
    return SplitMix64(seed).spawn(workers)
