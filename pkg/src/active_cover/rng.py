"""Seeding.

All randomness comes from ``numpy.random.Generator`` backed by PCG64
(PCG-XSL-RR 128/64), whose output stream for a given seed is fixed across
platforms.  Integer seeds go through numpy's ``SeedSequence`` hashing, so
nearby seeds give unrelated streams.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(a, b):
    """Derive a 64-bit seed from ``(a, b)`` (splitmix64 finalizer).

    >>> mix64(0, 0)
    16294208416658607535
    """
    z = (int(a) + (int(b) + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def make_rng(seed):
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def trial_seeds(base_seed, trial):
    """Return ``(dataset_seed, learner_seed)`` for one trial."""
    data_seed = mix64(base_seed, trial)
    return data_seed, mix64(data_seed, 0)
