import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from p2g.ioutil import FormatError
from p2g.scorer import (
    EOS,
    NGramScorer,
    TargetText,
    lid_token,
    load_scorer,
    save_scorer,
    train_scorer,
)


def small_scorer(order=2, alpha=0.2, window=1):
    pairs = [
        (("k", "a"), TargetText("xx", "ka")),
        (("k", "a", "t"), TargetText("xx", "kat")),
        (("m", "u"), TargetText("yy", "mu")),
        (("m", "u", "t"), TargetText("yy", "mut")),
    ]
    return train_scorer(pairs, order=order, smoothing_alpha=alpha,
                        context_window=window), pairs


# ---- target text / lid tokens -------------------------------------------


def test_lid_token_format():
    assert lid_token("ky") == "<lid:ky>"
    assert lid_token("pt-br") == "<lid:pt-br>"


def test_target_text_rejects_bad_lid():
    for bad in ("", "KY", "k y", "-x", "a_b"):
        with pytest.raises(ValueError):
            TargetText(bad, "text")


def test_target_text_ordering():
    assert TargetText("aa", "b") < TargetText("ab", "a")
    assert TargetText("aa", "a") < TargetText("aa", "b")


# ---- training -----------------------------------------------------------


def test_train_collects_sorted_inventories():
    sc, _ = small_scorer()
    assert sc.languages == ("xx", "yy")
    assert sc.units == tuple(sorted(sc.units))
    assert set("katmu") <= set(sc.units)


def test_train_rejects_empty():
    with pytest.raises(ValueError):
        train_scorer([])


def test_train_is_order_independent():
    sc, pairs = small_scorer()
    shuffled = list(pairs)
    random.Random(7).shuffle(shuffled)
    sc2 = train_scorer(shuffled, order=2, smoothing_alpha=0.2, context_window=1)
    probes = [(TargetText("xx", "kat"), ("k", "a", "t")),
              (TargetText("yy", "zzz"), ("m",))]
    for y, ph in probes:
        assert sc.log_score(y, ph) == sc2.log_score(y, ph)


def test_config_validation():
    with pytest.raises(ValueError):
        NGramScorer(order=0, smoothing_alpha=0.1, context_window=1,
                    languages=("xx",), units=("a",), counts={})
    with pytest.raises(ValueError):
        NGramScorer(order=2, smoothing_alpha=0.0, context_window=1,
                    languages=("xx",), units=("a",), counts={})
    with pytest.raises(ValueError):
        NGramScorer(order=2, smoothing_alpha=0.1, context_window=-1,
                    languages=("xx",), units=("a",), counts={})
    with pytest.raises(ValueError):
        NGramScorer(order=2, smoothing_alpha=0.1, context_window=1,
                    languages=(), units=("a",), counts={})


# ---- distributions ------------------------------------------------------


def test_step_zero_distributes_over_lid_tokens_only():
    sc, _ = small_scorer()
    ph = ("k", "a")
    step0 = [sc.step_log_probs(TargetText(code, ""), ph)[0] for code in sc.languages]
    assert sum(math.exp(v) for v in step0) == pytest.approx(1.0, abs=1e-12)


def test_later_steps_form_sub_distribution():
    """At every step past 0, probabilities over units + EOS sum to 1."""
    sc, _ = small_scorer()
    ph = ("k", "a", "t")
    for prefix in ("", "k", "ka", "zz"):
        step = len(prefix) + 1
        key = sc._state_key(ph, step, (lid_token("xx"), *prefix))
        total = sum(math.exp(sc._step_log_prob(key, step, u))
                    for u in sc.units + (EOS,))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_log_score_is_sum_of_steps():
    sc, _ = small_scorer()
    y = TargetText("xx", "kat")
    ph = ("k", "a", "t")
    steps = sc.step_log_probs(y, ph)
    assert len(steps) == len(y.graphemes) + 2  # lid + units + eos
    assert sc.log_score(y, ph) == pytest.approx(sum(steps), abs=0.0)


def test_oov_unit_scores_at_floor():
    sc, _ = small_scorer()
    score = sc.log_score(TargetText("xx", "q"), ("k",))  # 'q' never trained
    assert score > float("-inf")


def test_unknown_lid_rejected():
    sc, _ = small_scorer()
    with pytest.raises(ValueError):
        sc.log_score(TargetText("zz", "ka"), ("k", "a"))


def test_context_window_limits_phoneme_influence():
    """Phonemes outside the +/-window around the aligned position are
    invisible to a step's distribution."""
    sc, _ = small_scorer(window=0)
    y = TargetText("xx", "k")
    a = sc.step_log_probs(y, ("k", "a"))
    b = sc.step_log_probs(y, ("k", "t"))
    # step 0 aligns to phoneme 0 and step 1 to phoneme 0; tail can't matter
    assert a[0] == b[0] and a[1] == b[1]


# ---- generation ---------------------------------------------------------


def test_generation_scores_equal_log_score(trained_scorer, corpus):
    _, manifest = corpus
    for rec in manifest.records[:6]:
        for text, score in trained_scorer.generate_top_s(rec.phonemes, 4, max_len=12):
            assert score == trained_scorer.log_score(text, rec.phonemes)


def test_generation_sorted_and_bounded(trained_scorer, corpus):
    _, manifest = corpus
    rec = manifest.records[0]
    out = trained_scorer.generate_top_s(rec.phonemes, 5, max_len=3)
    assert len(out) <= 5
    scores = [s for _, s in out]
    assert scores == sorted(scores, reverse=True)
    assert all(len(t.graphemes) <= 3 for t, _ in out)


def test_generation_deterministic(trained_scorer, corpus):
    _, manifest = corpus
    rec = manifest.records[1]
    a = trained_scorer.generate_top_s(rec.phonemes, 4, max_len=8)
    b = trained_scorer.generate_top_s(rec.phonemes, 4, max_len=8)
    assert a == b


def test_generation_rejects_bad_args(trained_scorer):
    with pytest.raises(ValueError):
        trained_scorer.generate_top_s(("a",), 0)
    with pytest.raises(ValueError):
        trained_scorer.generate_top_s(("a",), 2, max_len=-1)


def test_predict_lid_recovers_language(trained_scorer, corpus):
    _, manifest = corpus
    hits = sum(trained_scorer.predict_lid(rec.phonemes) == rec.lang
               for rec in manifest.records)
    assert hits == len(manifest.records)  # disjoint phoneme inventories


# ---- persistence --------------------------------------------------------


def test_save_load_round_trip(tmp_path, trained_scorer, corpus):
    path = tmp_path / "scorer.json"
    save_scorer(trained_scorer, path)
    back = load_scorer(path)
    assert back.order == trained_scorer.order
    assert back.languages == trained_scorer.languages
    assert back.units == trained_scorer.units
    _, manifest = corpus
    for rec in manifest.records[:8]:
        assert back.log_score(rec.text, rec.phonemes) == \
            trained_scorer.log_score(rec.text, rec.phonemes)


def test_save_is_deterministic(tmp_path, trained_scorer):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_scorer(trained_scorer, p1)
    save_scorer(trained_scorer, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_wrong_format(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"format": "other", "version": 1}), encoding="utf-8")
    with pytest.raises(FormatError):
        load_scorer(p)


def test_load_rejects_bad_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{", encoding="utf-8")
    with pytest.raises(FormatError):
        load_scorer(p)


# ---- property: scoring is finite and monotone in length ------------------


@settings(max_examples=30, deadline=None)
@given(st.text(alphabet="kamut", max_size=6))
def test_scores_finite_for_any_unit_string(graphemes):
    sc, _ = small_scorer()
    val = sc.log_score(TargetText("xx", graphemes), ("k", "a"))
    assert math.isfinite(val)
    assert val < 0.0
