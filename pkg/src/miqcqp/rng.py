"""Portable, seedable random number generation.

Instance generation must be bit-reproducible across platforms and library
versions, so randomness is produced by a fixed, documented generator rather
than whatever the host numpy ships.  The generator is SplitMix64 used in
counter mode: draw k is ``mix64(seed + (k + 1) * GAMMA)`` where ``mix64`` is
the standard SplitMix64 finalizer and GAMMA = 0x9E3779B97F4A7C15.  Uniform
doubles take the top 53 bits of a draw; normal deviates come from the
Box-Muller transform applied to consecutive uniform pairs.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_CHILD_SALT = np.uint64(0x5851F42D4C957F2D)

_TWO53 = float(1 << 53)


def _mix64(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


class PortableRng:
    """Deterministic stream of uniforms / normals / integers.

    The stream position is an explicit counter, so identical call sequences
    on identical seeds yield identical output everywhere.
    """

    def __init__(self, seed: int):
        self._seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self._counter = 0

    @property
    def seed(self) -> int:
        return int(self._seed)

    def _raw(self, count: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + count + 1, dtype=np.uint64)
        self._counter += count
        with np.errstate(over="ignore"):
            keys = self._seed + idx * _GAMMA
        return _mix64(keys)

    def uniform(self, count: int) -> np.ndarray:
        """Uniform doubles in [0, 1)."""
        return (self._raw(count) >> np.uint64(11)).astype(np.float64) / _TWO53

    def normal(self, count: int) -> np.ndarray:
        """Standard normal deviates via Box-Muller on uniform pairs."""
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs)
        # shift u1 into (0, 1] so log() is finite
        u1 = (np.floor(u[0::2] * _TWO53) + 1.0) / _TWO53
        u2 = u[1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:count]

    def integers(self, low: int, high: int, count: int) -> np.ndarray:
        """Integers in [low, high), floor-mapped from uniforms."""
        if high <= low:
            raise ValueError("empty integer range")
        u = self.uniform(count)
        return (low + np.floor(u * (high - low))).astype(np.int64)

    def signs(self, count: int) -> np.ndarray:
        """Vector of +1/-1, equiprobable."""
        return np.where(self.uniform(count) < 0.5, -1, 1).astype(np.int64)

    def choice_without_replacement(self, pool: int, take: int) -> np.ndarray:
        """`take` distinct indices from range(pool), partial Fisher-Yates."""
        if take > pool:
            raise ValueError("cannot take more than pool size")
        items = np.arange(pool, dtype=np.int64)
        picks = self.uniform(take)
        for j in range(take):
            k = j + int(picks[j] * (pool - j))
            items[j], items[k] = items[k], items[j]
        return items[:take].copy()

    def derive(self, index: int) -> "PortableRng":
        """Independent child stream, stable under the parent's position."""
        with np.errstate(over="ignore"):
            key = np.uint64(index) + _CHILD_SALT
        child = _mix64(self._seed ^ _mix64(key))
        return PortableRng(int(child))
