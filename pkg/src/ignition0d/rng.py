"""Deterministic 64-bit PRNG (splitmix64) used for every random draw.

Pure integer arithmetic, so streams are reproducible across platforms and
Python versions. Independent streams for parallel work are derived by mixing
a base seed with a stream index; generating samples in parallel or serially
therefore yields identical numbers.
"""
from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Stateful splitmix64 stream."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()


def derive(seed: int, *indices: int) -> SplitMix64:
    """Independent stream for (seed, indices).

    Used to split one run seed into per-sample / per-purpose streams so that
    work order (serial or parallel) cannot change the draws.
    """
    state = seed & _MASK
    for idx in indices:
        state = _mix((state + _GAMMA * ((idx & _MASK) + 1)) & _MASK)
    return SplitMix64(state)
