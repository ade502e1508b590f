"""Two-stage decoding: phoneme beam search, per-hypothesis text generation,
then marginal rescoring of the pooled candidates.

Each of the top-k phoneme hypotheses proposes its s best texts; the k*s
candidates are deduplicated and every text is rescored with
logsumexp_k(weight_k + log p(y | h_k)), where a hypothesis that never
proposed y contributes probability zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import ctc
from .ctc import PosteriorGrid, ScoredHypothesis
from .ioutil import FormatError, atomic_write_lines, field, iter_jsonl
from .logmath import LOG_ZERO, log_add, log_sum
from .scorer import ConditionalScorer, TargetText


@dataclass(frozen=True)
class DecodeResult:
    best: TargetText
    pool: tuple[tuple[TargetText, float], ...]
    k_used: int
    s_used: int


def pool_and_rescore(hyps: Sequence[ScoredHypothesis],
                     candidates: Sequence[Sequence[tuple[TargetText, float]]],
                     normalize_weights: bool = False) -> list[tuple[TargetText, float]]:
    """Merge per-hypothesis candidate lists into one deduplicated ranking.

    ``candidates[i]`` holds (text, log p(text | hyps[i])) pairs. The pooled
    score of a text sums contributions over the hypotheses that proposed it;
    the rest contribute nothing. Sorted by score, ties by (lid, graphemes).
    """
    if not hyps:
        raise ValueError("hypothesis list must be non-empty")
    if len(hyps) != len(candidates):
        raise ValueError("hypothesis and candidate lists are misaligned")
    weights = [h.log_score for h in hyps]
    if normalize_weights:
        z = log_sum(weights)
        weights = [w - z for w in weights]
    pooled: dict[TargetText, float] = {}
    for weight, cands in zip(weights, candidates):
        for text, lp in cands:
            pooled[text] = log_add(pooled.get(text, LOG_ZERO), weight + lp)
    ranked = sorted(pooled.items(), key=lambda it: (-it[1], it[0]))
    return ranked


def decode(grid: PosteriorGrid, scorer: ConditionalScorer, k: int, s: int,
           beam_width: int | None = None, max_len: int = 64,
           normalize_weights: bool = True) -> DecodeResult:
    """Best text for one utterance plus the full rescored pool.

    ``k_used`` may fall below k when the grid supports fewer distinct
    sequences. Weight normalization is on by default here: it never changes
    the ranking but makes pool scores comparable across utterances.
    """
    if k < 1 or s < 1:
        raise ValueError("k and s must be >= 1")
    width = beam_width if beam_width is not None else max(4 * k, 16)
    hyps = ctc.prefix_beam_search(grid, width, k)
    candidates = [scorer.generate_top_s(grid.alphabet.to_symbols(h.sequence), s, max_len)
                  for h in hyps]
    pool = pool_and_rescore(hyps, candidates, normalize_weights)
    s_used = max((len(c) for c in candidates), default=0)
    return DecodeResult(best=pool[0][0], pool=tuple(pool),
                        k_used=len(hyps), s_used=s_used)


def save_decode_results(items: Iterable[tuple[str, DecodeResult]], path) -> None:
    """One JSON line per utterance: id, winning lid/text, and the pool."""
    lines = []
    for utt_id, result in items:
        obj = {
            "id": utt_id,
            "lid": result.best.lid,
            "text": result.best.graphemes,
            "pool": [{"lid": t.lid, "text": t.graphemes, "logp": lp}
                     for t, lp in result.pool],
        }
        lines.append(json.dumps(obj, ensure_ascii=False))
    atomic_write_lines(path, lines)


def load_hypotheses(path) -> dict[str, TargetText]:
    """Read decode output back as {utterance id: best text}."""
    out: dict[str, TargetText] = {}
    for line_no, obj in iter_jsonl(path):
        utt_id = field(obj, "id", str, path=path, line_no=line_no)
        lid = field(obj, "lid", str, path=path, line_no=line_no)
        text = field(obj, "text", str, path=path, line_no=line_no)
        if utt_id in out:
            raise FormatError(f"duplicate utterance id {utt_id!r}", path=path,
                              line_no=line_no)
        try:
            out[utt_id] = TargetText(lid=lid, graphemes=text)
        except ValueError as exc:
            raise FormatError(str(exc), path=path, line_no=line_no) from exc
    return out
