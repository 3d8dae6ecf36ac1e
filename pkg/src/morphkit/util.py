"""Seeded randomness and small shared helpers."""

from __future__ import annotations

import hashlib

import numpy as np


def stream_rng(seed: int, name: str) -> np.random.Generator:
    """Named random substream derived from a single master seed.

    The same (seed, name) pair always yields the same generator, independent
    of process hash randomization, so all randomness in a run flows from one
    --seed value.
    """
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    child = int.from_bytes(digest[:8], "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, child])))
