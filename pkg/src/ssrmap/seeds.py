"""Deterministic seeding.

Every stochastic stage of the simulation derives its RNG from a 64-bit
FNV-1a hash of a canonical key string, so results are reproducible across
machines, shard layouts and re-runs.
"""
from __future__ import annotations

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of a UTF-8 string."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def rng_for(*key_parts) -> np.random.Generator:
    """Generator seeded from the FNV-1a hash of the joined key parts.

    Parts are joined with '|' after str() conversion; floats should be
    pre-formatted by the caller when exact key stability matters.
    """
    key = "|".join(str(p) for p in key_parts)
    return np.random.default_rng(fnv1a64(key))
