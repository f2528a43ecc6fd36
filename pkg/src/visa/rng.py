"""Deterministic random-number streams.

All randomness flows through numpy Generators backed by the Philox
counter-based bit generator: identical seeds give identical draw
sequences, and independent substreams are derived from (seed, key)
pairs without any shared state, so concurrent users only ever differ
by their key.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Root stream for a given integer seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent stream identified by an integer seed plus a key tuple.

    Streams with the same seed but different keys are statistically
    independent; the same (seed, key) always reproduces the same draws.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))
