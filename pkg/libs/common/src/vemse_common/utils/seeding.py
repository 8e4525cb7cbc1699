"""
Seed derivation.

Every random draw in the workspace comes from a generator built here from the
single user seed plus a tuple of integer keys naming its purpose, so runs are
reproducible and independent streams never overlap.
"""

import numpy as np

# Purpose keys. Values are part of the reproducibility contract: do not renumber.
NMF_INIT = 1
GAMMA_DRAWS = 2
MH_CHAIN = 3
RECONSTRUCTION = 4
FREE_ENERGY = 5
DATASET = 6
NOISE = 7
TRAINING = 8
MODEL_INIT = 9
BENCHMARK = 10


def seed_sequence(seed: int, *keys: int) -> np.random.SeedSequence:
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError(f"seed and keys must be nonnegative, got {seed}, {keys}")
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(keys))


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *keys)``."""
    return np.random.default_rng(seed_sequence(seed, *keys))


def frame_rngs(seed: int, n_frames: int, *keys: int) -> list[np.random.Generator]:
    """One generator per frame so frame-parallel work stays bit-reproducible."""
    return [make_rng(seed, *keys, t) for t in range(n_frames)]


def as_generator(seed: "int | np.random.Generator") -> np.random.Generator:
    """Pass generators through; build one from a plain integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(int(seed))
