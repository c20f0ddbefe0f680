"""Seeded, splittable random streams.

Every stream is a Philox counter-based generator keyed by ``(seed, *path)``,
so a worker can rebuild its stream from its index alone and scheduling
cannot change results.
"""
import numpy as np

SEED_MASK = (1 << 64) - 1


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for ``seed`` and an optional integer sub-path."""
    if seed < 0 or seed > SEED_MASK:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    entropy = [int(seed), *(int(p) for p in path)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *path: int) -> int:
    """A child 64-bit seed for ``(seed, *path)``, for APIs that take integer seeds."""
    if seed < 0 or seed > SEED_MASK:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence([int(seed), *(int(p) for p in path)])
    return int(ss.generate_state(1, np.uint64)[0])
