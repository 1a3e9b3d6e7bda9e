"""Seed derivation.

Every random stage draws from its own stream keyed by ``(seed, *keys)`` so that
results do not depend on call order or on how work is spread across processes.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError("stream keys must be non-negative")
        return int(k)
    return zlib.crc32(str(k).encode())


def derive_seed(seed, *keys) -> np.random.SeedSequence:
    extra = tuple(_key(k) for k in keys)
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + extra)
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.SeedSequence(int(seed), spawn_key=extra)


def make_rng(seed, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *keys))
