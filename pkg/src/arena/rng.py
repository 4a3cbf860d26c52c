"""Deterministic counter-based random streams.

Every simulation draws from Philox generators keyed by (scenario key, seed),
so runs are replayable and independent of execution order. A run consumes
three independent substreams (optimizer, context, learner realization), one
uniform per round from each, which keeps looped and vectorized simulation
paths bit-identical.
"""

from __future__ import annotations

import hashlib

import numpy as np


def key_to_entropy(key: str | int) -> int:
    """Map an arbitrary scenario key to a 128-bit integer."""
    if isinstance(key, int):
        return key & ((1 << 128) - 1)
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "big")


def derive_streams(key: str | int, seed: int, n: int = 3) -> list[np.random.Generator]:
    """Return `n` independent Philox generators for (key, seed)."""
    ss = np.random.SeedSequence(entropy=key_to_entropy(key), spawn_key=(int(seed),))
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(n)]


def single_stream(key: str | int, seed: int) -> np.random.Generator:
    return derive_streams(key, seed, n=1)[0]
