"""Counter-based deterministic random values.

Per-cell variation must not depend on access order or on how many draws
happened before, so instead of a sequential generator each draw hashes a
(seed, *key) tuple through a 64-bit mixer. Same key, same value, always.
"""

from __future__ import annotations

import math

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(x: int) -> int:
    # splitmix64 finalizer
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def hash_key(seed: int, *key: int) -> int:
    h = _mix(seed & _MASK)
    for part in key:
        h = _mix((h + _GOLDEN + (part & _MASK)) & _MASK)
    return h


def uniform01(seed: int, *key: int) -> float:
    """Uniform in [0, 1) with 53 significant bits."""
    return (hash_key(seed, *key) >> 11) * 2.0**-53


def standard_normal(seed: int, *key: int) -> float:
    """Box-Muller from two keyed uniforms (streams 0 and 1)."""
    u1 = uniform01(seed, *key, 0)
    u2 = uniform01(seed, *key, 1)
    if u1 == 0.0:
        u1 = 2.0**-53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
