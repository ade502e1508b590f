"""Corpus plumbing: manifests, training-line serialization, noisy-phoneme
augmentation, and duration-balanced oversampling.

Phoneme tokens live as symbol strings here; index sequences only exist inside
the CTC layer and are converted at the boundary through a grid's alphabet.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import ctc
from .ctc import PosteriorGrid
from .ioutil import FormatError, atomic_write_lines, field, iter_jsonl
from .scorer import TargetText, lid_token

IPA_TAG = "<ipa>"


@dataclass(frozen=True)
class UtteranceRecord:
    """One manifest row. ``repeat`` marks copies appended by oversampling;
    the remaining fields of a copy are identical to its source record."""

    utterance_id: str
    lang: str
    dur_sec: float
    phonemes: tuple[str, ...]
    text: TargetText
    repeat: bool = False

    def __post_init__(self) -> None:
        if not self.utterance_id:
            raise ValueError("utterance id must be non-empty")
        if not math.isfinite(self.dur_sec) or self.dur_sec <= 0:
            raise ValueError("dur_sec must be a positive duration")
        if self.lang != self.text.lid:
            raise ValueError(f"record language {self.lang!r} does not match "
                             f"text lid {self.text.lid!r}")
        object.__setattr__(self, "phonemes", tuple(self.phonemes))


@dataclass(frozen=True)
class CorpusManifest:
    records: tuple[UtteranceRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def by_language(self) -> dict[str, list[UtteranceRecord]]:
        groups: dict[str, list[UtteranceRecord]] = defaultdict(list)
        for rec in self.records:
            groups[rec.lang].append(rec)
        return dict(groups)

    @property
    def language_hours(self) -> dict[str, float]:
        """Total duration per language in hours, recomputed from records."""
        hours: dict[str, float] = defaultdict(float)
        for rec in self.records:
            hours[rec.lang] += rec.dur_sec / 3600.0
        return dict(hours)


def serialize_training_line(phonemes: Sequence[str], text: TargetText) -> str:
    """Render one training sample as ``<ipa> p1 p2 ... | <lid:xx> graphemes``.

    Phoneme tokens may not be empty or contain whitespace or '|'; graphemes
    may not contain line breaks. Everything else round-trips verbatim.
    """
    for tok in phonemes:
        if not tok:
            raise ValueError("phoneme tokens must be non-empty")
        if "|" in tok or any(ch.isspace() for ch in tok):
            raise ValueError(f"phoneme token {tok!r} contains '|' or whitespace")
    if "\n" in text.graphemes or "\r" in text.graphemes:
        raise ValueError("graphemes must not contain line breaks")
    return f"{IPA_TAG} {' '.join(phonemes)} | {lid_token(text.lid)} {text.graphemes}"


def parse_training_line(line: str) -> tuple[tuple[str, ...], TargetText]:
    """Exact inverse of serialize_training_line on its valid output domain."""
    prefix = IPA_TAG + " "
    if not line.startswith(prefix):
        raise ValueError(f"line does not start with {prefix!r}")
    body = line[len(prefix):]
    # phoneme tokens never contain '|', so the first separator is the real one
    sep = body.find(" | ")
    if sep < 0:
        raise ValueError("missing ' | ' separator")
    phoneme_part, rest = body[:sep], body[sep + 3:]
    if phoneme_part:
        tokens = tuple(phoneme_part.split(" "))
        for tok in tokens:
            if not tok:
                raise ValueError("empty phoneme token")
    else:
        tokens = ()
    if not rest.startswith("<lid:"):
        raise ValueError("missing <lid:..> tag")
    close = rest.find("> ")
    if close < 0:
        raise ValueError("unterminated <lid:..> tag")
    code = rest[len("<lid:"):close]
    graphemes = rest[close + 2:]
    return tokens, TargetText(lid=code, graphemes=graphemes)


def generate_danp(grid: PosteriorGrid, record: UtteranceRecord, n_best: int,
                  beam_width: int | None = None,
                  include_clean: bool = False) -> list[tuple[tuple[str, ...], TargetText]]:
    """Noisy training pairs: the n-best phoneme hypotheses for the utterance,
    each paired with the clean reference text, in beam-rank order.

    ``include_clean`` appends the reference phonemes as one extra pair.
    Returns fewer than n_best pairs when the grid supports fewer distinct
    sequences.
    """
    if n_best < 1:
        raise ValueError("n_best must be >= 1")
    width = beam_width if beam_width is not None else max(2 * n_best, 16)
    hyps = ctc.prefix_beam_search(grid, width, n_best)
    pairs = [(grid.alphabet.to_symbols(h.sequence), record.text) for h in hyps]
    if include_clean:
        pairs.append((record.phonemes, record.text))
    return pairs


def oversample_manifest(manifest: CorpusManifest, target_hours: float,
                        rng: np.random.Generator) -> CorpusManifest:
    """Bring every language up to max(actual, target) hours.

    Languages already at or above the target are untouched. A deficient
    language appends uniform-with-replacement copies of its own records until
    its cumulative hours first reach the target, so the overshoot is less
    than one utterance. Original records keep their order and content; copies
    follow them with the repeat marker set.
    """
    if not math.isfinite(target_hours) or target_hours <= 0:
        raise ValueError("target_hours must be positive")
    appended: list[UtteranceRecord] = []
    groups = manifest.by_language()
    for lang in sorted(groups):
        pool = groups[lang]
        if not pool:
            raise ValueError(f"language {lang!r} has no records to sample from")
        hours = sum(rec.dur_sec for rec in pool) / 3600.0
        while hours < target_hours:
            pick = pool[int(rng.integers(len(pool)))]
            appended.append(replace(pick, repeat=True))
            hours += pick.dur_sec / 3600.0
    return CorpusManifest(records=manifest.records + tuple(appended))


@dataclass(frozen=True)
class LanguageStats:
    hours: float
    original_hours: float
    records: int
    repetition_factor: float


def manifest_stats(manifest: CorpusManifest) -> dict[str, LanguageStats]:
    """Per-language totals; the repetition factor compares effective hours
    (all records) against the hours of non-repeat records."""
    stats: dict[str, LanguageStats] = {}
    for lang, recs in sorted(manifest.by_language().items()):
        hours = sum(r.dur_sec for r in recs) / 3600.0
        original = sum(r.dur_sec for r in recs if not r.repeat) / 3600.0
        factor = hours / original if original > 0 else float("inf")
        stats[lang] = LanguageStats(hours=hours, original_hours=original,
                                    records=len(recs), repetition_factor=factor)
    return stats


def load_manifest(path) -> CorpusManifest:
    """Read a JSONL manifest of {"id", "lang", "dur_sec", "phonemes", "text"}
    rows; an optional boolean "repeat" marks oversampling copies."""
    records = []
    for line_no, obj in iter_jsonl(path):
        utt_id = field(obj, "id", str, path=path, line_no=line_no)
        lang = field(obj, "lang", str, path=path, line_no=line_no)
        dur = field(obj, "dur_sec", (int, float), path=path, line_no=line_no)
        phonemes = field(obj, "phonemes", list, path=path, line_no=line_no)
        text = field(obj, "text", str, path=path, line_no=line_no)
        if not all(isinstance(p, str) for p in phonemes):
            raise FormatError("field 'phonemes' must be a list of strings",
                              path=path, line_no=line_no)
        repeat = obj.get("repeat", False)
        if not isinstance(repeat, bool):
            raise FormatError("field 'repeat' must be a boolean", path=path,
                              line_no=line_no)
        try:
            records.append(UtteranceRecord(
                utterance_id=utt_id, lang=lang, dur_sec=float(dur),
                phonemes=tuple(phonemes), text=TargetText(lid=lang, graphemes=text),
                repeat=repeat))
        except ValueError as exc:
            raise FormatError(str(exc), path=path, line_no=line_no) from exc
    return CorpusManifest(records=tuple(records))


def record_to_json(rec: UtteranceRecord) -> str:
    obj: dict = {"id": rec.utterance_id, "lang": rec.lang, "dur_sec": rec.dur_sec,
                 "phonemes": list(rec.phonemes), "text": rec.text.graphemes}
    if rec.repeat:
        obj["repeat"] = True
    return json.dumps(obj, ensure_ascii=False)


def save_manifest(manifest: CorpusManifest, path) -> None:
    atomic_write_lines(path, (record_to_json(rec) for rec in manifest.records))


def load_training_lines(path) -> list[tuple[tuple[str, ...], TargetText]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                pairs.append(parse_training_line(line))
            except ValueError as exc:
                raise FormatError(str(exc), path=path, line_no=line_no) from exc
    return pairs


def save_training_lines(pairs: Iterable[tuple[Sequence[str], TargetText]], path) -> None:
    atomic_write_lines(path, (serialize_training_line(p, t) for p, t in pairs))
