"""Built-in sanity suite: fast oracle checks runnable from the CLI.

Each check compares a production code path against an independent reference
(exhaustive enumeration, closed-form fixtures, or statistical bounds) at toy
scale. The full suite runs in a few seconds.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import ctc, data, marginal, metrics, oracles
from .data import CorpusManifest, UtteranceRecord, parse_training_line, serialize_training_line
from .scorer import TargetText
from .seeding import derive_rng

# ten-language evaluation fixtures with known aggregate values
FIXTURE_HOURS = {"en": 2227.3, "es": 382.3, "fr": 823.4, "it": 271.5, "ky": 32.7,
                 "nl": 70.2, "ru": 149.8, "sv": 29.8, "tr": 61.5, "tt": 20.8}
FIXTURE_WER_ROW_A = {"en": 8.26, "es": 5.84, "fr": 10.44, "it": 6.84, "ky": 10.07,
                     "nl": 6.05, "ru": 5.98, "sv": 17.94, "tr": 10.92, "tt": 23.25}
FIXTURE_WER_ROW_B = {"en": 8.22, "es": 6.12, "fr": 10.62, "it": 7.17, "ky": 2.82,
                     "nl": 5.48, "ru": 3.90, "sv": 10.59, "tr": 7.33, "tt": 14.34}
FIXTURE_PER_ROW = {"en": 5.42, "es": 1.96, "fr": 3.52, "it": 2.25, "ky": 4.06,
                   "nl": 2.64, "ru": 2.97, "sv": 11.33, "tr": 4.04, "tt": 5.97}
FIXTURE_LID_ROW = {"en": 99.72, "es": 99.54, "fr": 99.80, "it": 99.05, "ky": 99.01,
                   "nl": 99.73, "ru": 99.44, "sv": 97.91, "tr": 98.88, "tt": 95.63}
FIXTURE_AGGREGATES = {
    "wer_a": (10.56, 8.46),
    "wer_b": (7.66, 8.22),
    "per": (4.41, 4.37),
    "lid": (98.87, 99.61),
}
LOW_RESOURCE = ("ky", "nl", "ru", "sv", "tr", "tt")
TARGET_HOURS = 240.0


class StubScorer:
    """Deterministic pseudo-random conditional: hash of (y, phonemes) mapped
    to a negative log score. Not normalized; fine for estimator algebra."""

    def __init__(self, salt: int = 0, scale: float = 3.0):
        self.salt = salt
        self.scale = scale

    def log_score(self, y: TargetText, phonemes) -> float:
        key = f"{self.salt}\x1f{y.lid}\x1f{y.graphemes}\x1f" + "\x1f".join(phonemes)
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        u = int.from_bytes(digest[:8], "big") / 2.0 ** 64
        return -self.scale * u - 0.05


@dataclass
class CheckResult:
    name: str
    tolerance: str
    passed: bool
    detail: str


def _random_grids(seed: int, count: int, max_frames: int, max_symbols: int):
    from .synth import random_grid
    rng = np.random.default_rng(seed)
    return [random_grid(rng, utterance_id=f"g{i}", max_frames=max_frames,
                        max_symbols=max_symbols) for i in range(count)]


def check_forward_oracle() -> CheckResult:
    worst = 0.0
    for grid in _random_grids(101, 10, 5, 3):
        dist = oracles.sequence_distribution(grid)
        for seq, p in dist.items():
            got = ctc.forward_logprob(grid, seq)
            worst = max(worst, abs(got - math.log(p)))
    return CheckResult("forward vs path enumeration", "|dlog| <= 1e-10",
                       worst <= 1e-10, f"max |dlog| = {worst:.3g}")


def check_partition() -> CheckResult:
    worst = 0.0
    for grid in _random_grids(102, 10, 5, 3):
        total = sum(math.exp(ctc.forward_logprob(grid, seq))
                    for seq in oracles.sequence_distribution(grid))
        worst = max(worst, abs(total - 1.0))
    return CheckResult("forward partition", "|sum - 1| <= 1e-8",
                       worst <= 1e-8, f"max |sum - 1| = {worst:.3g}")


def check_beam_oracle() -> CheckResult:
    worst = 0.0
    ok = True
    for grid in _random_grids(103, 10, 5, 2):
        want = oracles.top_sequences(grid, k=len(oracles.sequence_distribution(grid)))
        got = ctc.prefix_beam_search(grid, beam_width=len(want), k=len(want))
        if [h.sequence for h in got] != [seq for seq, _ in want]:
            ok = False
            break
        worst = max(worst, max(abs(h.log_score - lp)
                               for h, (_, lp) in zip(got, want)))
    passed = ok and worst <= 1e-10
    return CheckResult("prefix beam vs enumeration", "sequences exact, |dlog| <= 1e-10",
                       passed, "sequence mismatch" if not ok else f"max |dlog| = {worst:.3g}")


def check_sampler() -> CheckResult:
    grid = _random_grids(104, 1, 4, 2)[0]
    draws = 50_000
    rng = derive_rng(424242, grid.utterance_id)
    seqs = ctc.sample_k_hypotheses(grid, draws, rng)
    counts: dict = {}
    for s in seqs:
        counts[s] = counts.get(s, 0) + 1
    worst = 0.0
    for seq, p in oracles.sequence_distribution(grid).items():
        freq = counts.get(seq, 0) / draws
        se = math.sqrt(max(p * (1 - p), 1e-12) / draws)
        worst = max(worst, abs(freq - p) / (3 * se))
    return CheckResult("path sampler vs forward frequencies",
                       "within 3 standard errors at 50k draws",
                       worst <= 1.0, f"max |z|/3 = {worst:.3f}")


def check_tkm_exact() -> CheckResult:
    scorer = StubScorer(salt=7)
    y = TargetText(lid="xx", graphemes="ab")
    worst = 0.0
    for grid in _random_grids(105, 10, 4, 2):
        dist = oracles.sequence_distribution(grid)
        hyps = [ctc.ScoredHypothesis(seq, ctc.forward_logprob(grid, seq))
                for seq in sorted(dist)]
        est = marginal.tkm_log_marginal(hyps, y, scorer, grid.alphabet)
        exact = math.log(oracles.exact_marginal(grid, y, scorer))
        worst = max(worst, abs(est.log_marginal - exact))
    return CheckResult("full-list weighted marginal", "|dlog| <= 1e-9",
                       worst <= 1e-9, f"max |dlog| = {worst:.3g}")


def check_sskm_unbiased() -> CheckResult:
    scorer = StubScorer(salt=11)
    y = TargetText(lid="xx", graphemes="ab")
    grid = _random_grids(106, 1, 4, 2)[0]
    exact = oracles.exact_marginal(grid, y, scorer)
    runs, k = 200, 16
    values = np.array([
        math.exp(marginal.sskm_log_marginal(
            grid, y, scorer, k, derive_rng(5150, f"run{r}")).log_marginal)
        for r in range(runs)])
    se = values.std(ddof=1) / math.sqrt(runs)
    z = abs(values.mean() - exact) / se
    return CheckResult("equal-weight sampled marginal is unbiased",
                       f"mean within 3 SE over {runs} runs",
                       z <= 3.0, f"|z| = {z:.2f}")


def check_metric_fixtures() -> CheckResult:
    rows = {"wer_a": FIXTURE_WER_ROW_A, "wer_b": FIXTURE_WER_ROW_B,
            "per": FIXTURE_PER_ROW, "lid": FIXTURE_LID_ROW}
    worst = 0.0
    for name, row in rows.items():
        macro, weighted = metrics.aggregate(row, FIXTURE_HOURS)
        want_macro, want_weighted = FIXTURE_AGGREGATES[name]
        worst = max(worst, abs(macro - want_macro), abs(weighted - want_weighted))
    return CheckResult("aggregate metric fixtures", "each within 0.01",
                       worst <= 0.01, f"max |d| = {worst:.4f}")


def check_round_trip() -> CheckResult:
    rng = np.random.default_rng(107)
    tokens = ["a", "ə", "tʃ", "oʊ", "ɛ̃", "ж", "ŋ", "q", "ɤ", "ʑ"]
    charsets = ["abc xyz", "привет мир", "çöü", "日本語", "| <> :"]
    lids = ["en", "ky", "ru", "sv", "tt", "zh"]
    for _ in range(500):
        phonemes = tuple(tokens[int(i)] for i in
                         rng.integers(0, len(tokens), size=int(rng.integers(0, 7))))
        pool = charsets[int(rng.integers(len(charsets)))]
        graphemes = "".join(pool[int(i)] for i in
                            rng.integers(0, len(pool), size=int(rng.integers(0, 10))))
        text = TargetText(lid=lids[int(rng.integers(len(lids)))], graphemes=graphemes)
        back = parse_training_line(serialize_training_line(phonemes, text))
        if back != (phonemes, text):
            return CheckResult("training-line round-trip", "exact inverse", False,
                               f"mismatch on {phonemes!r} / {text!r}")
    return CheckResult("training-line round-trip", "exact inverse", True,
                       "500 randomized pairs")


def hours_manifest(hours: dict[str, float], records_per_lang: int = 20) -> CorpusManifest:
    """Synthetic manifest whose per-language durations sum to the given hours."""
    records = []
    for lang in sorted(hours):
        dur = hours[lang] * 3600.0 / records_per_lang
        for i in range(records_per_lang):
            records.append(UtteranceRecord(
                utterance_id=f"{lang}-{i:04d}", lang=lang, dur_sec=dur,
                phonemes=("x",), text=TargetText(lid=lang, graphemes="x")))
    return CorpusManifest(records=tuple(records))


def check_oversampling() -> CheckResult:
    manifest = hours_manifest(FIXTURE_HOURS)
    balanced = data.oversample_manifest(manifest, TARGET_HOURS,
                                        np.random.default_rng(108))
    stats = data.manifest_stats(balanced)
    for lang in LOW_RESOURCE:
        st = stats[lang]
        max_dur = max(r.dur_sec for r in manifest.records if r.lang == lang) / 3600.0
        if not (TARGET_HOURS - 1e-9 <= st.hours < TARGET_HOURS + max_dur):
            return CheckResult("oversampling envelope",
                               "hours in [target, target + max utterance)",
                               False, f"{lang}: {st.hours:.3f}h")
    for lang in ("en", "es", "fr", "it"):
        if stats[lang].records != 20 or stats[lang].repetition_factor != 1.0:
            return CheckResult("oversampling envelope", "high-resource untouched",
                               False, f"{lang} changed")
    factor = stats["ky"].repetition_factor
    want = TARGET_HOURS / FIXTURE_HOURS["ky"]
    ok = abs(factor - want) / want <= 0.05
    return CheckResult("oversampling envelope",
                       "low-resource in envelope, repetition within 5%",
                       ok, f"ky factor {factor:.3f} vs {want:.3f}")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_forward_oracle,
    check_partition,
    check_beam_oracle,
    check_sampler,
    check_tkm_exact,
    check_sskm_unbiased,
    check_metric_fixtures,
    check_round_trip,
    check_oversampling,
)


def run_selftest(echo=print) -> bool:
    ok = True
    for make in CHECKS:
        result = make()
        ok = ok and result.passed
        status = "PASS" if result.passed else "FAIL"
        echo(f"{status}  {result.name} ({result.tolerance}; {result.detail})")
    return ok
