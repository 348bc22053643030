"""Counter-mode pseudo-random streams built on SplitMix64.

Every random quantity in the package is a pure function of a 64-bit seed and a
counter, so colourings, decks and graphs are reproducible bit-for-bit on any
platform with numpy's fixed-width unsigned arithmetic.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def mix64(x: int) -> int:
    """SplitMix64 finaliser on a Python integer."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *labels: int) -> int:
    """Keyed 64-bit hash of ``seed`` and integer labels (e.g. a trial index)."""
    h = mix64((seed & MASK64) ^ 0x6A09E667F3BCC909)
    for lab in labels:
        h = mix64((h + GOLDEN + (lab & MASK64)) & MASK64)
    return h


def stream(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Return ``count`` uint64 words: word i is mix(seed + (offset+i+1)*GOLDEN)."""
    with np.errstate(over="ignore"):
        ctr = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
        state = np.uint64(seed & MASK64) + ctr * np.uint64(GOLDEN)
        return _mix_array(state)


def uniform_ints(seed: int, count: int, r: int, offset: int = 0) -> np.ndarray:
    """Integers in [0, r) by the multiply-high reduction of the top 32 bits.

    The bias is at most r / 2**32, far below anything a Monte Carlo run can see.
    """
    if r < 1 or r > 1 << 32:
        raise ValueError(f"r must be in [1, 2**32], got {r}")
    with np.errstate(over="ignore"):
        hi = stream(seed, count, offset) >> np.uint64(32)
        return ((hi * np.uint64(r)) >> np.uint64(32)).astype(np.int64)


def bits(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Fair coin flips (top bit of each word) as a bool array."""
    return (stream(seed, count, offset) >> np.uint64(63)).astype(bool)


def permutation(seed: int, count: int) -> np.ndarray:
    """A seeded permutation of range(count) (stable argsort of a word stream)."""
    return np.argsort(stream(seed, count), kind="stable")
