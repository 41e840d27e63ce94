"""Deterministic 64-bit pseudo-random primitives.

Everything that needs reproducible randomness in this package (dataset
splits, weight init, epoch shuffles, the fallback sentence encoder) is
driven by splitmix64 so that any implementation, in any language, can
reproduce the exact same bits from the same seed.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64_mix(z: int) -> int:
    """The splitmix64 finalizer: a bijective 64-bit mixing function."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


class SplitMix64:
    """splitmix64 stream generator.

    state advances by the 64-bit golden ratio; each output is the
    finalizer applied to the new state.  Seeds are taken mod 2^64, so
    negative Python ints are accepted (two's complement).
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN64) & MASK64
        return splitmix64_mix(self.state)

    def next_float(self) -> float:
        # 53 high bits -> uniform double in [0, 1)
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_below(self, bound: int) -> int:
        """Uniform-ish integer in [0, bound). Modulo reduction; the bias
        is irrelevant here, determinism is what matters."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound


def fisher_yates(items: list, stream: SplitMix64) -> None:
    """In-place Fisher-Yates shuffle driven by a splitmix64 stream.

    Walks i from len-1 down to 1 and swaps with j = next_u64() % (i+1).
    This exact loop is part of the split file contract: re-implementations
    must reproduce partitions bit-exactly.
    """
    for i in range(len(items) - 1, 0, -1):
        j = stream.next_below(i + 1)
        items[i], items[j] = items[j], items[i]


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & MASK64
    return h
