"""Counter-based random streams keyed by (seed, stream, *indices).

Every draw in the generator comes from a Philox generator whose key is
derived from the full key tuple, so any frame or observer can be
regenerated on its own and in any order.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, name: str, *indices: int) -> np.random.Generator:
    words = [int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode()), *(int(i) & 0xFFFFFFFF for i in indices)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
