"""
Counter-based seed derivation.

One master seed feeds every random draw in a run. Each consumer asks for a
generator keyed by a purpose string plus integer counters (task id, epoch),
so adding a new consumer never shifts the draws of an existing one.
"""

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"Seed keys must be non-negative, got {key}")
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """
    Returns a Philox generator for (seed, *keys).

    Args:
        seed (int): Master run seed.
        *keys: Purpose strings and counters, e.g. ("shuffle", task, epoch).

    Returns:
        np.random.Generator: Independent, reproducible stream.
    """
    entropy = [_key_to_int(seed)] + [_key_to_int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
