import math

import numpy as np
import pytest

from p2g import oracles
from p2g.ctc import ScoredHypothesis, forward_logprob, prefix_beam_search, sample_k_hypotheses
from p2g.logmath import log_sum
from p2g.marginal import (
    Method,
    batch_objective,
    skm_log_marginal,
    sskm_log_marginal,
    tkm_log_marginal,
)
from p2g.scorer import TargetText
from p2g.seeding import derive_rng

from conftest import HashScorer, make_grid

Y = TargetText("xx", "abc")


def full_hypothesis_list(grid):
    dist = oracles.sequence_distribution(grid)
    return [ScoredHypothesis(seq, forward_logprob(grid, seq)) for seq in sorted(dist)]


# ---- tkm ----------------------------------------------------------------


def test_tkm_empty_list_raises(tiny_alphabet):
    with pytest.raises(ValueError):
        tkm_log_marginal([], Y, HashScorer(), tiny_alphabet)


def test_tkm_exact_with_full_coverage():
    rng = np.random.default_rng(21)
    scorer = HashScorer("tkm")
    for trial in range(10):
        g = make_grid(rng, f"u{trial}", frames=int(rng.integers(1, 5)))
        est = tkm_log_marginal(full_hypothesis_list(g), Y, scorer, g.alphabet)
        want = math.log(oracles.exact_marginal(g, Y, scorer))
        assert est.log_marginal == pytest.approx(want, abs=1e-9)
        assert est.method is Method.TKM


def test_tkm_normalization_shifts_by_constant():
    rng = np.random.default_rng(4)
    g = make_grid(rng, frames=3)
    hyps = prefix_beam_search(g, 16, 3)
    scorer = HashScorer("norm")
    plain = tkm_log_marginal(hyps, Y, scorer, g.alphabet)
    normed = tkm_log_marginal(hyps, Y, scorer, g.alphabet, normalize_weights=True)
    shift = log_sum([h.log_score for h in hyps])
    assert normed.log_marginal == pytest.approx(plain.log_marginal - shift, abs=1e-12)


# ---- skm ----------------------------------------------------------------


def test_skm_rejects_bad_k():
    g = make_grid(np.random.default_rng(0))
    with pytest.raises(ValueError):
        skm_log_marginal(g, Y, HashScorer(), 0, np.random.default_rng(0))


def test_skm_exact_under_full_coverage():
    """Once sampling hits every reachable sequence, dedup + forward weights
    reproduce the exact marginal."""
    rng = np.random.default_rng(8)
    scorer = HashScorer("skm")
    g = make_grid(rng, frames=3, min_prob=0.15)
    dist = oracles.sequence_distribution(g)
    draw = derive_rng(0, "skm-cov")
    seqs = set(sample_k_hypotheses(g, 30_000, draw))
    assert seqs == set(dist)  # coverage precondition, not the assertion
    est = skm_log_marginal(g, Y, scorer, 30_000, derive_rng(0, "skm-cov"))
    want = math.log(oracles.exact_marginal(g, Y, scorer))
    assert est.log_marginal == pytest.approx(want, abs=1e-9)


def test_skm_deterministic_given_stream():
    g = make_grid(np.random.default_rng(2))
    a = skm_log_marginal(g, Y, HashScorer(), 64, derive_rng(5, g.utterance_id))
    b = skm_log_marginal(g, Y, HashScorer(), 64, derive_rng(5, g.utterance_id))
    assert a == b


# ---- sskm ---------------------------------------------------------------


def test_sskm_equals_naive_average():
    """The tallied implementation must match the plain definition
    logsumexp(score per raw draw) - log k."""
    g = make_grid(np.random.default_rng(3), frames=3)
    scorer = HashScorer("naive")
    k = 500
    est = sskm_log_marginal(g, Y, scorer, k, derive_rng(1, g.utterance_id))
    seqs = sample_k_hypotheses(g, k, derive_rng(1, g.utterance_id))
    naive = log_sum([scorer.log_score(Y, g.alphabet.to_symbols(h)) for h in seqs])
    naive -= math.log(k)
    assert est.log_marginal == pytest.approx(naive, abs=1e-12)
    assert est.k_used == k


def test_sskm_unbiased_quick():
    g = make_grid(np.random.default_rng(6), frames=3)
    scorer = HashScorer("bias")
    exact = oracles.exact_marginal(g, Y, scorer)
    vals = [math.exp(sskm_log_marginal(g, Y, scorer, 16,
                                       derive_rng(run, "bias")).log_marginal)
            for run in range(300)]
    mean = sum(vals) / len(vals)
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(mean - exact) <= 3 * se


def test_sskm_converges_with_k():
    g = make_grid(np.random.default_rng(12), frames=3, min_prob=0.1)
    scorer = HashScorer("conv")
    exact = math.log(oracles.exact_marginal(g, Y, scorer))
    small = sskm_log_marginal(g, Y, scorer, 50, derive_rng(0, "c")).log_marginal
    large = sskm_log_marginal(g, Y, scorer, 50_000, derive_rng(0, "c")).log_marginal
    assert abs(large - exact) < max(abs(small - exact), 5e-3)


# ---- batch objective ----------------------------------------------------


def _records(n, seed):
    rng = np.random.default_rng(seed)
    return [(make_grid(rng, f"r{i}", frames=3), Y) for i in range(n)]


def test_batch_objective_order_and_composition_invariance():
    scorer = HashScorer("batch")
    records = _records(4, 31)
    full = batch_objective(records, scorer, Method.SSKM, 32, seed=9)
    singles = [batch_objective([r], scorer, Method.SSKM, 32, seed=9) for r in records]
    for (utt, nll), single in zip(full.per_record, singles):
        assert (utt, nll) == single.per_record[0]
    swapped = batch_objective(records[::-1], scorer, Method.SSKM, 32, seed=9)
    assert dict(swapped.per_record) == dict(full.per_record)


def test_batch_objective_mean():
    scorer = HashScorer("mean")
    records = _records(3, 32)
    out = batch_objective(records, scorer, Method.TKM, 4, seed=0)
    assert out.mean_nll == pytest.approx(
        sum(v for _, v in out.per_record) / 3, abs=1e-12)


def test_batch_objective_method_routing():
    scorer = HashScorer("route")
    records = _records(2, 33)
    tkm = batch_objective(records, scorer, "tkm", 4, seed=1)
    skm = batch_objective(records, scorer, "skm", 4, seed=1)
    sskm = batch_objective(records, scorer, "sskm", 4, seed=1)
    assert len({tkm.mean_nll, skm.mean_nll, sskm.mean_nll}) >= 2


def test_batch_objective_rejects_empty():
    with pytest.raises(ValueError):
        batch_objective([], HashScorer(), Method.TKM, 4, seed=0)
