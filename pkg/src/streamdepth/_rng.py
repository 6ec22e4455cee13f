"""Deterministic seed fan-out.

Every randomized component (direction sampling, stream generation, metric
rays, Monte Carlo caches) derives its own substream from a single top-level
seed through SeedSequence spawn keys.  Derivation is counter-based, so the
substream for a given key path is independent of evaluation order and of how
many other substreams were drawn before it.
"""

from __future__ import annotations

import numpy as np


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``key`` under ``seed``."""
    return np.random.default_rng(seed_sequence(seed, *key))


def derive_seed(seed: int, *key: int) -> int:
    """Collapse a derived substream to a plain integer seed."""
    return int(seed_sequence(seed, *key).generate_state(1, np.uint64)[0])
