from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bleu_exact, chrf_exact
from seqsearch.metrics import (
    BleuConfig,
    ChrfConfig,
    LengthMismatchError,
    chrf,
    corpus_bleu,
    sentence_bleu,
)

B = BleuConfig()
C = ChrfConfig()


def test_bleu_golden_one_missing_token():
    got = sentence_bleu(B, "a b c d e", "a b c d f")
    assert got == pytest.approx(100 * (4 / 5 * 3 / 4 * 2 / 3 * 1 / 2) ** 0.25, rel=1e-12)
    assert got == pytest.approx(66.874, abs=0.01)


def test_bleu_identity_and_empty():
    assert sentence_bleu(B, "x y z", "x y z") == 100.0
    assert sentence_bleu(B, "", "a b") == 0.0
    assert sentence_bleu(B, "a a a a", "b b b b") == 0.0


def test_bleu_exp_smoothing_hand_value():
    # unigram 3/3, bigram 1/2, trigram 0/1 -> floor 1/(2*1)
    got = sentence_bleu(B, "a b d", "a b c d")
    bp = math.exp(1 - 4 / 3)
    assert got == pytest.approx(100 * bp * (1 * 0.5 * 0.5) ** (1 / 3), rel=1e-12)


def test_bleu_short_hypothesis_effective_order():
    # only unigrams and bigrams exist for a two-token hypothesis
    assert sentence_bleu(B, "a b", "a b") == 100.0


def test_brevity_penalty_is_one_when_long_enough():
    longer = sentence_bleu(B, "a b c d e f", "a b c d e")
    assert longer == pytest.approx(100 * (5 / 6 * 4 / 5 * 3 / 4 * 2 / 3) ** 0.25)


def test_corpus_bleu_two_segment_hand_pooled():
    hyps = ["a b c d", "a b"]
    refs = ["a b c d", "a c d"]
    # pooled: 1-gram 5/6, 2-gram 3/4, 3-gram 2/2, 4-gram 1/1; lengths 6 vs 7
    expected = 100 * math.exp(1 - 7 / 6) * (5 / 6 * 3 / 4 * 2 / 2 * 1 / 1) ** 0.25
    assert corpus_bleu(B, hyps, refs) == pytest.approx(expected, rel=1e-12)
    assert corpus_bleu(B, hyps, refs) == pytest.approx(75.264, abs=0.001)


def test_corpus_bleu_identity_and_mismatch():
    assert corpus_bleu(B, ["a b c"], ["a b c"]) == 100.0
    assert corpus_bleu(B, ["a b", "c d e f"], ["a b", "c d e f"]) == 100.0
    with pytest.raises(LengthMismatchError):
        corpus_bleu(B, ["a"], [])


def test_corpus_single_segment_matches_unsmoothed_sentence():
    cfg = BleuConfig(smoothing="none")
    for h, r in [("a b c d e", "a b c d f"), ("a b x d", "a b c d"), ("a", "a b")]:
        assert corpus_bleu(cfg, [h], [r]) == sentence_bleu(cfg, h, r)


def test_chrf_golden():
    got = chrf(ChrfConfig(2, 2.0), "abcd", "abce")
    # orders 1 and 2: P = R = (3/4 + 2/3) / 2
    assert got == pytest.approx(100 * (3 / 4 + 2 / 3) / 2, rel=1e-12)
    assert got == pytest.approx(70.8333, abs=1e-4)


def test_chrf_identity_disjoint_whitespace():
    assert chrf(C, "a b c", "a b c") == 100.0
    assert chrf(C, "ab c", "a bc") == 100.0
    assert chrf(C, "abc", "xyz") == 0.0


@pytest.mark.parametrize("bad", [dict(max_ngram=0), dict(smoothing="add1")])
def test_bleu_config_rejects(bad):
    with pytest.raises(ValueError):
        BleuConfig(**bad)


@pytest.mark.parametrize("bad", [dict(char_ngram_order=0), dict(beta=0.0)])
def test_chrf_config_rejects(bad):
    with pytest.raises(ValueError):
        ChrfConfig(**bad)


def test_bleu_order_sensitivity():
    # reordering beyond unigrams changes BLEU, unigram-only BLEU does not
    uni = BleuConfig(max_ngram=1)
    assert sentence_bleu(uni, "c b a d", "a b c d") == sentence_bleu(uni, "a b c d", "a b c d")
    assert sentence_bleu(B, "c b a d", "a b c d") < 100.0


words = st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=0, max_size=9).map(" ".join)


@given(words, words)
@settings(max_examples=200, deadline=None)
def test_bleu_matches_fraction_oracle(h, r):
    assert sentence_bleu(B, h, r) == pytest.approx(bleu_exact(h, r), rel=1e-12, abs=1e-12)
    assert 0.0 <= sentence_bleu(B, h, r) <= 100.0 + 1e-9


@given(st.text("abcd ", max_size=10), st.text("abcd ", max_size=10))
@settings(max_examples=200, deadline=None)
def test_chrf_matches_fraction_oracle(h, r):
    got = chrf(C, h, r)
    assert got == pytest.approx(chrf_exact(h, r), rel=1e-12, abs=1e-12)
    assert 0.0 <= got <= 100.0 + 1e-9
