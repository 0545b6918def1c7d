"""Hierarchical seed derivation.

A root seed plus string labels deterministically yields independent
generator streams, so adding a consumer (an extra metric, a new logging
step) never perturbs the randomness of existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def seed_stream(root: int, *labels) -> np.random.Generator:
    entropy = [int(root) & 0xFFFFFFFF]
    for label in labels:
        entropy.append(zlib.crc32(str(label).encode("utf-8")))
    return np.random.default_rng(np.random.SeedSequence(entropy))
