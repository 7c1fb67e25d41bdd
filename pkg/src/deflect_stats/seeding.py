"""Deterministic seed derivation.

Every random draw comes from a generator keyed by a tuple of integers, so
results never depend on evaluation order or thread scheduling.
"""

import hashlib

import numpy as np


def derive_seed(master: int, label: str) -> int:
    """Stable 63-bit child seed for a named stage."""
    digest = hashlib.sha256(f"{int(master)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def replicate_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *(int(k) for k in keys)])
