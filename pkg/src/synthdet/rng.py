"""Deterministic seeded random streams.

Every random draw in the toolkit comes from a :class:`RandomStream`, a
SplitMix64 generator whose state is derived from ``(master_seed,
purpose_tag, index)``.  The same identity always produces the same
sequence, on every platform, which is what makes whole dataset runs
byte-reproducible.

The mapping conventions are fixed and documented here so they can be
re-implemented bit-exactly elsewhere:

* ``next_unit``: the top 53 bits of the next 64-bit output, scaled by
  ``2**-53`` -> a float in ``[0, 1)``.
* ``next_int(lo, hi)``: ``lo + ((next_u64() * span) >> 64)`` with
  ``span = hi - lo + 1`` (Lemire-style bounded mapping, no rejection).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


@dataclass
class RandomStream:
    """SplitMix64 stream with a stable ``(seed, tag, index)`` identity."""

    master_seed: int
    purpose_tag: str
    index: int
    _state: int = field(init=False)

    def __post_init__(self):
        if not self.purpose_tag:
            raise ValueError("purpose_tag must be non-empty")
        self._state = (
            (self.master_seed & _MASK64)
            ^ _fnv1a64(self.purpose_tag.encode("utf-8"))
            ^ ((self.index * _GAMMA) & _MASK64)
        )

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def next_unit(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def next_uniform(self, lo: float, hi: float) -> float:
        if lo > hi:
            raise ValueError(f"next_uniform: lo {lo} > hi {hi}")
        return lo + (hi - lo) * self.next_unit()

    def next_int(self, lo: int, hi: int) -> int:
        if lo > hi:
            raise ValueError(f"next_int: lo {lo} > hi {hi}")
        span = hi - lo + 1
        return lo + ((self.next_u64() * span) >> 64)

    def next_u64_block(self, n: int) -> np.ndarray:
        """Next ``n`` outputs as a uint64 array, bit-identical to n calls
        of :meth:`next_u64`.

        SplitMix64 state advances by a fixed gamma, so the block is
        computed from vectorized per-call states.
        """
        if n < 0:
            raise ValueError("block size must be non-negative")
        start = np.uint64(self._state)
        gamma = np.uint64(_GAMMA)
        with np.errstate(over="ignore"):
            z = start + gamma * np.arange(1, n + 1, dtype=np.uint64)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
        self._state = (self._state + n * _GAMMA) & _MASK64
        return z

    def next_unit_block(self, n: int) -> np.ndarray:
        """``n`` floats in [0, 1), bit-identical to n calls of next_unit."""
        return (self.next_u64_block(n) >> np.uint64(11)) * 2.0**-53


def derive_stream(master_seed: int, purpose_tag: str, index: int) -> RandomStream:
    """Derive an independent stream for one unit of work."""
    return RandomStream(master_seed, purpose_tag, index)
