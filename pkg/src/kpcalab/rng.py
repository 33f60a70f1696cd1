"""Deterministic stream derivation for all randomness in the library.

Every sampling routine takes an integer seed and derives a counter-based
bit generator from it, so results never depend on call order, thread
count, or global state.  Derivation rule: the master seed and a sequence
of labels (strings or integers) are joined into the byte string
``b"kpcalab|<seed>|<label>|..."``, hashed with SHA-256, and the first
128 bits of the digest become a Philox key.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "generator"]


def derive_seed(master: int, *labels: int | str) -> int:
    """Derive a 128-bit child seed from a master seed and stream labels."""
    parts = ["kpcalab", str(int(master))] + [str(lab) for lab in labels]
    digest = hashlib.sha256("|".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "big")


def generator(seed: int, *labels: int | str) -> np.random.Generator:
    """Generator for the stream named by ``labels`` under ``seed``.

    With no labels the seed is used as the Philox key directly, so
    ``generator(derive_seed(s, "x"))`` and ``generator(s, "x")`` agree.
    """
    key = derive_seed(seed, *labels) if labels else int(seed) % (1 << 128)
    return np.random.Generator(np.random.Philox(key=key))
