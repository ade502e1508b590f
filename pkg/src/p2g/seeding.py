"""Deterministic per-utterance random streams.

One global seed plus the utterance id yields an independent numpy Generator
per utterance, so results never depend on processing order and utterances
can be handled in parallel without coordination.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_rng(seed: int, utterance_id: str) -> np.random.Generator:
    """Generator for one utterance, stable across platforms and run order."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    digest = hashlib.sha256(utterance_id.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 8], "little") for i in range(0, 32, 8)]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *words]))
