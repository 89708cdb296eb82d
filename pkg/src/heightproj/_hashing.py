"""Counter-based hashing used wherever the library needs reproducible randomness.

Every random decision (height-map mixing, LiDAR noise, dropout) is a pure
function of a 64-bit seed plus integer counters, so results never depend on
evaluation order, chunking, or thread count. The scalar reference below is
plain Python integer arithmetic; ``hash3_array`` is the vectorized twin and
must stay bit-identical to it (tested).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2**-53, the spacing that maps the top 53 bits of a hash onto [0, 1).
_INV53 = 1.0 / float(1 << 53)


def _mix64(x: int) -> int:
    x = (x ^ (x >> 30)) * _MIX1 & _MASK64
    x = (x ^ (x >> 27)) * _MIX2 & _MASK64
    return x ^ (x >> 31)


def hash3(seed: int, a: int, b: int) -> int:
    """Hash (seed, a, b) to a uniform 64-bit value."""
    h = _mix64((seed ^ _GOLDEN) & _MASK64)
    h = _mix64(h ^ (a & _MASK64))
    return _mix64(h ^ (b & _MASK64))


def unit_from_hash(h: int) -> float:
    """Map a 64-bit hash to [0, 1)."""
    return (h >> 11) * _INV53


def unit_open_from_hash(h: int) -> float:
    """Map a 64-bit hash to (0, 1], safe as a log() argument."""
    return ((h >> 11) + 1) * _INV53


def hash3_array(seed: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized ``hash3``; a and b broadcast against each other."""
    # First round involves only the scalar seed; do it in exact Python ints so
    # numpy never multiplies scalars (scalar uint64 overflow raises a warning).
    h0 = _mix64((seed ^ _GOLDEN) & _MASK64)
    h = _mix64_array(np.uint64(h0) ^ np.asarray(a, dtype=np.uint64))
    return _mix64_array(h ^ np.asarray(b, dtype=np.uint64))


def _mix64_array(x):
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def unit_from_hash_array(h: np.ndarray) -> np.ndarray:
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


def unit_open_from_hash_array(h: np.ndarray) -> np.ndarray:
    return ((h >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _INV53
