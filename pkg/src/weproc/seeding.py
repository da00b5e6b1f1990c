"""Counter-derived RNG streams for reproducible, worker-independent runs."""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key); identical arguments give identical streams."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def as_generator(seed_or_rng) -> np.random.Generator:
    """Accept either an integer seed or an already-built Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return stream(int(seed_or_rng))
