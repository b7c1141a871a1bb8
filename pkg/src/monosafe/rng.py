"""Seeded 64-bit PRNG (splitmix64) for reproducible adversary sampling.

The generator is ~15 lines and fully specified by its seed, so golden tests
can be reproduced in any language: state advances by the 64-bit golden-ratio
constant and the output is a mix of xor-shifts and two multiplications
(Steele, Lea & Flood 2014).  Doubles are formed from the top 53 bits.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self._state = int(seed) & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix(self._state)

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = _MASK - (_MASK + 1) % n
        while True:
            u = self.next_u64()
            if u <= limit:
                return u % n

    def spawn(self, index: int) -> "SplitMix64":
        """Independent child stream derived from (seed, index)."""
        return SplitMix64(_mix(self._state ^ ((index + 1) * _GOLDEN & _MASK)))
