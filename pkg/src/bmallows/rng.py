"""Seeded random streams.

Every stochastic routine takes an explicit ``numpy.random.Generator``. Streams
are Philox (counter-based) generators keyed by ``(seed, *key)`` so that
independent pieces of work, such as importance-sampling batches or parallel
chains, draw from disjoint streams no matter how they are scheduled.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int | None, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_rng(rng_or_seed) -> np.random.Generator:
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return make_rng(rng_or_seed)
