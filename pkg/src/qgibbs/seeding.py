"""Deterministic RNG stream derivation.

All randomness in the package flows from a single master seed. Sub-streams
are derived by hashing (master_seed, label, label, ...) into a SeedSequence,
so results never depend on execution order or thread scheduling.
"""

import hashlib

import numpy as np


def _label_int(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label)
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def seed_sequence(master_seed: int, *labels) -> np.random.SeedSequence:
    entropy = [_label_int(master_seed)] + [_label_int(lbl) for lbl in labels]
    return np.random.SeedSequence(entropy)


def derive_rng(master_seed: int, *labels) -> np.random.Generator:
    """A Generator keyed by (master_seed, *labels)."""
    return np.random.default_rng(seed_sequence(master_seed, *labels))


def derive_seed(master_seed: int, *labels) -> int:
    """A 64-bit child seed keyed by (master_seed, *labels)."""
    state = seed_sequence(master_seed, *labels).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])
