"""Deterministic derivation of named sub-seeds from a base seed."""

from __future__ import annotations

import zlib

import numpy as np


def derive_seed(base: int, *keys) -> int:
    """Stable 64-bit seed derived from a base seed and a key path.

    String keys are hashed with crc32 so derivation is stable across
    processes and Python hash randomization.
    """
    entropy = [int(base) & 0xFFFFFFFFFFFFFFFF]
    for key in keys:
        if isinstance(key, str):
            entropy.append(zlib.crc32(key.encode("utf-8")))
        else:
            entropy.append(int(key) & 0xFFFFFFFFFFFFFFFF)
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])
