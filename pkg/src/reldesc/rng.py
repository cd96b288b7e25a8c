"""Pinned pseudo-random streams for reproducible fixtures.

The generator is fixed by algorithm, not by library version: SplitMix64 for
the integer stream, Box-Muller for Gaussians. u64 values map to doubles in
(0, 1) via (x >> 11) * 2**-53, with an exact zero remapped to 2**-53 so the
log in Box-Muller is always defined. Each Box-Muller transform consumes two
uniforms and yields two normals; the cosine branch is emitted first.
"""

from __future__ import annotations

import math

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_TWO_NEG53 = 2.0 ** -53


class SplitMix64:
    """Sequential SplitMix64 over a 64-bit state."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        """Double in (0, 1), open at both ends."""
        u = (self.next_u64() >> 11) * _TWO_NEG53
        return u if u > 0.0 else _TWO_NEG53

    def next_below(self, bound: int) -> int:
        """Integer in [0, bound) via modulo reduction."""
        return self.next_u64() % bound


class GaussianStream:
    """Deterministic stream of standard-normal doubles for a given seed."""

    def __init__(self, seed: int):
        self._rng = SplitMix64(seed)
        self._cached: float | None = None

    def next(self) -> float:
        if self._cached is not None:
            value, self._cached = self._cached, None
            return value
        u1 = self._rng.next_unit()
        u2 = self._rng.next_unit()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._cached = radius * math.sin(angle)
        return radius * math.cos(angle)

    def take(self, n: int) -> list[float]:
        return [self.next() for _ in range(n)]


def gaussian_stream(seed: int) -> GaussianStream:
    return GaussianStream(seed)
