"""Deterministic 64-bit generator with an explicit, settable seed.

SplitMix64 is used so that identical seeds reproduce identical session
secrets bit-for-bit on every platform. This is deliberately the weak spot an
attacker exploits: whoever controls the seed controls the secrets.
"""

from __future__ import annotations

from dataclasses import dataclass

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


@dataclass
class DetPrng:
    """SplitMix64 state. Single-owner; do not share across threads."""

    state: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.state, int):
            raise TypeError(f"seed must be an int, got {type(self.state).__name__}")
        self.state &= MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def bits(self, k: int) -> int:
        """Return ``k`` random bits, built from whole 64-bit draws, LSB first.

        Each call consumes ``ceil(k / 64)`` outputs; surplus high bits of the
        last draw are discarded.
        """
        if k < 0:
            raise ValueError("k must be non-negative")
        out = 0
        shift = 0
        while shift < k:
            out |= self.next_u64() << shift
            shift += 64
        return out & ((1 << k) - 1)


def prng_next(p: DetPrng) -> int:
    return p.next_u64()
