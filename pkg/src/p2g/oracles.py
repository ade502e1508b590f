"""Brute-force reference implementations.

Everything here enumerates the full event space directly in probability
space and is deliberately independent of the fast paths in ctc/marginal/
decode (including a private restatement of the collapse rule), so the two
sides can check each other. Only feasible at toy sizes.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .ctc import PhonemeSequence, PosteriorGrid
from .scorer import ConditionalScorer, TargetText


def _collapse(path: tuple[int, ...]) -> tuple[int, ...]:
    out: list[int] = []
    prev = 0
    for idx in path:
        if idx != 0 and idx != prev:
            out.append(idx)
        prev = idx
    return tuple(out)


def sequence_distribution(grid: PosteriorGrid) -> dict[PhonemeSequence, float]:
    """Probability of every reachable collapsed sequence, by enumerating all
    (V+1)^T frame paths. Zero-probability sequences are dropped."""
    probs = np.exp(grid.logp)
    dist: dict[PhonemeSequence, float] = {}
    for path in itertools.product(range(grid.alphabet.size), repeat=grid.frames):
        p = 1.0
        for t, c in enumerate(path):
            p *= probs[t, c]
        if p > 0.0:
            key = _collapse(path)
            dist[key] = dist.get(key, 0.0) + p
    return dist


def top_sequences(grid: PosteriorGrid, k: int) -> list[tuple[PhonemeSequence, float]]:
    """Top-k (sequence, log probability), same tie rule as the beam search:
    score, then length, then lexicographic index order."""
    dist = sequence_distribution(grid)
    ranked = sorted(((seq, math.log(p)) for seq, p in dist.items()),
                    key=lambda it: (-it[1], len(it[0]), it[0]))
    return ranked[:k]


def exact_marginal(grid: PosteriorGrid, y: TargetText,
                   scorer: ConditionalScorer) -> float:
    """sum_h p(h | grid) * p(y | h), in probability space."""
    total = 0.0
    for seq, p in sequence_distribution(grid).items():
        total += p * math.exp(scorer.log_score(y, grid.alphabet.to_symbols(seq)))
    return total


def enumerate_texts(languages, units, max_len: int) -> list[TargetText]:
    """Every text up to max_len graphemes over the given unit inventory."""
    texts = []
    for lid in sorted(languages):
        for length in range(max_len + 1):
            for combo in itertools.product(sorted(units), repeat=length):
                texts.append(TargetText(lid=lid, graphemes="".join(combo)))
    return texts


def exact_decode(grid: PosteriorGrid, scorer: ConditionalScorer, languages, units,
                 max_len: int) -> tuple[TargetText, float]:
    """Argmax of the exact marginal over every text up to max_len; ties take
    the lexicographically smallest (lid, graphemes)."""
    dist = sequence_distribution(grid)
    scored = [(grid.alphabet.to_symbols(seq), p) for seq, p in dist.items()]
    best: TargetText | None = None
    best_value = -1.0
    for y in sorted(enumerate_texts(languages, units, max_len)):
        value = sum(p * math.exp(scorer.log_score(y, symbols))
                    for symbols, p in scored)
        if value > best_value:
            best, best_value = y, value
    assert best is not None
    return best, best_value
