"""Shared fixtures: small grids, a trained scorer, and a hash-based stub."""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np
import pytest

from p2g import synth
from p2g.ctc import Alphabet, PosteriorGrid
from p2g.scorer import TargetText, train_scorer


class HashScorer:
    """Deterministic stand-in conditional model.

    Scores depend on (y, phonemes) through a hash, so they look arbitrary but
    reproduce exactly. Useful when a test needs *some* scorer but must not
    depend on n-gram behaviour.
    """

    def __init__(self, salt: str = "", scale: float = 3.0):
        self.salt = salt
        self.scale = scale

    def log_score(self, y: TargetText, phonemes: Sequence[str]) -> float:
        key = f"{self.salt}\x1f{y.lid}\x1f{y.graphemes}\x1f" + "\x1f".join(phonemes)
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        u = int.from_bytes(digest[:8], "little") / 2.0**64
        return -self.scale * u - 0.05


@pytest.fixture(scope="session")
def corpus():
    """Synthetic 4-language corpus: (grids, manifest)."""
    return synth.build_corpus(seed=11, utts_per_lang=10)


@pytest.fixture(scope="session")
def trained_scorer(corpus):
    _, manifest = corpus
    pairs = [(r.phonemes, r.text) for r in manifest.records]
    return train_scorer(pairs, order=2, smoothing_alpha=0.2, context_window=1)


@pytest.fixture
def tiny_alphabet():
    return Alphabet(("a", "b"))


def make_grid(rng: np.random.Generator, utterance_id: str = "u", frames: int = 4,
              symbols: tuple[str, ...] = ("a", "b"),
              min_prob: float = 0.0) -> PosteriorGrid:
    """Dirichlet-row grid; ``min_prob`` floors every cell (then renormalizes)
    so no path has vanishing probability."""
    alphabet = Alphabet(symbols)
    probs = rng.dirichlet(np.ones(alphabet.size), size=frames)
    if min_prob > 0.0:
        probs = probs + min_prob
        probs /= probs.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    return PosteriorGrid.renormalized(utterance_id, alphabet, logp)
