"""Deterministic seed derivation for reproducible randomized searches."""

from __future__ import annotations

import hashlib
import random


def derive_seed(seed: int, *labels) -> int:
    """A 64-bit child seed from a master seed and a label path.

    Stable across platforms and Python versions (sha256-based), so that
    every randomized search in the toolkit replays exactly.
    """
    text = "/".join(str(part) for part in (seed, *labels))
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(seed: int, *labels) -> random.Random:
    return random.Random(derive_seed(seed, *labels))
