"""Deterministic seed derivation for trials.

Every trial draws from its own generator. Child seeds are mixed out of the
master seed and a path of integers by numpy's SeedSequence, so no global
random state is ever touched and trial order does not matter.
"""

import numpy as np


def derive_seed(master: int, *path: int) -> int:
    """64-bit child seed of master along path."""
    if master < 0:
        raise ValueError(f"seeds are nonnegative, got {master}")
    sequence = np.random.SeedSequence(master, spawn_key=tuple(path))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def trial_rng(master: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *path))
