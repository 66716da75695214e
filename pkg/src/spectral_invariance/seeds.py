"""Stable per-trial seed derivation."""
from __future__ import annotations

import zlib

import numpy as np


def _as_word(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    key = int(key)
    if key < 0:
        raise ValueError("seed keys must be nonnegative")
    return key


def mix_seed(master_seed: int, *keys) -> int:
    """64-bit seed from (master_seed, *keys); strings are hashed with CRC32.

    Independent of process, platform and call order, so any trial can be
    rerun in isolation.
    """
    words = [_as_word(master_seed)] + [_as_word(k) for k in keys]
    state = np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)
    return int(state[0])


def rng_for(master_seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(mix_seed(master_seed, *keys))
