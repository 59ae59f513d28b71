"""Bit-exact PRNG and hashing primitives.

Everything random in the suite flows from a SplitMix64 stream so that a run
can be reproduced in any language from its recorded seed. Seeds for derived
streams are produced with 64-bit FNV-1a.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211

TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / (1 << 53)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """SplitMix64 stream (Steele, Lea & Flood).

    ``take`` and ``next_u64`` walk the same sequence, so mixing scalar and
    vectorised draws never changes the values produced.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return _mix64(self.state)

    def take(self, n: int) -> np.ndarray:
        """Next ``n`` outputs as a uint64 array."""
        if n <= 0:
            return np.zeros(0, dtype=np.uint64)
        with np.errstate(over="ignore"):
            steps = np.arange(1, n + 1, dtype=np.uint64)
            z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GOLDEN_GAMMA) & MASK64
        return z

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def random_array(self, n: int) -> np.ndarray:
        return (self.take(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def randbelow(self, bound: int) -> int:
        """Unbiased integer in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 64) % bound
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % bound

    def normal_array(self, n: int) -> np.ndarray:
        """Standard normals by Box-Muller, two uniforms per output."""
        u = self.random_array(2 * n).reshape(n, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        return radius * np.cos(TWO_PI * u[:, 1])

    def shuffle(self, items: list) -> list:
        """Fisher-Yates, last index down to 1. Returns a new list."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.randbelow(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


def angles_from_u64(x: np.ndarray) -> np.ndarray:
    """Map raw outputs to angles in [0, 2pi)."""
    return (x >> np.uint64(11)).astype(np.float64) * _INV_2_53 * TWO_PI


def next_params(seed: int, n: int) -> list[float]:
    """``n`` angles in [0, 2pi) drawn from the SplitMix64 stream seeded with ``seed``."""
    if n < 1:
        raise ValueError(f"need at least one parameter, got n={n}")
    return angles_from_u64(SplitMix64(seed).take(n)).tolist()


def canonical_counts_bytes(counts: Mapping[str, int]) -> bytes:
    return "".join(f"{key}:{counts[key]};" for key in sorted(counts)).encode("ascii")


def derive_seed(counts: Mapping[str, int]) -> int:
    """Seed for the next parameter draw, hashed from a measurement histogram.

    Keys are sorted so the result does not depend on insertion order.
    """
    if not counts:
        raise ValueError("cannot derive a seed from empty counts")
    return fnv1a64(canonical_counts_bytes(counts))


def substream_seed(master: int, tag: str, *index: int) -> int:
    """Seed of an independent stream identified by ``tag`` and ``index``."""
    label = ":".join([tag, str(int(master) & MASK64), *(str(i) for i in index)])
    return fnv1a64(label.encode("ascii"))
