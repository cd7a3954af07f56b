"""Reference-based metrics: sentence/corpus BLEU and chrF.

Pinned variant: whitespace tokens, up to 4-grams, effective order (orders
the hypothesis is too short to contain are dropped), sacreBLEU-style
brevity penalty, and "exp" smoothing for sentence BLEU where the k-th
zero-match order gets precision ``1 / (2**k * total)``.  A zero unigram
match count always gives 0.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .core import SeqSearchError


class LengthMismatchError(SeqSearchError, ValueError):
    pass


@dataclass(frozen=True)
class BleuConfig:
    max_ngram: int = 4
    smoothing: str = "exp"

    def __post_init__(self):
        if self.max_ngram < 1:
            raise ValueError("max_ngram must be >= 1")
        if self.smoothing not in ("exp", "none"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")


@dataclass(frozen=True)
class ChrfConfig:
    char_ngram_order: int = 6
    beta: float = 2.0

    def __post_init__(self):
        if self.char_ngram_order < 1:
            raise ValueError("char_ngram_order must be >= 1")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(hypothesis: str, reference: str, max_ngram: int = 4):
    """Clipped match counts, hypothesis n-gram totals, and both lengths."""
    hyp = hypothesis.split()
    ref = reference.split()
    correct = []
    total = []
    for n in range(1, max_ngram + 1):
        h = _ngrams(hyp, n)
        r = _ngrams(ref, n)
        correct.append(sum((h & r).values()))
        total.append(max(len(hyp) - n + 1, 0))
    return correct, total, len(hyp), len(ref)


def bleu_from_stats(correct, total, hyp_len, ref_len, smoothing="exp") -> float:
    if hyp_len == 0 or not total or total[0] == 0 or correct[0] == 0:
        return 0.0
    log_sum = 0.0
    order = 0
    zero_orders = 0
    for c, t in zip(correct, total):
        if t == 0:
            break
        order += 1
        if c == 0:
            if smoothing != "exp":
                return 0.0
            zero_orders += 1
            log_sum += math.log(1.0 / (2.0**zero_orders * t))
        else:
            log_sum += math.log(c / t)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_sum / order)


def sentence_bleu(cfg: BleuConfig, hypothesis: str, reference: str) -> float:
    correct, total, hl, rl = bleu_stats(hypothesis, reference, cfg.max_ngram)
    return bleu_from_stats(correct, total, hl, rl, cfg.smoothing)


def corpus_bleu(cfg: BleuConfig, hypotheses: Sequence[str], references: Sequence[str]) -> float:
    if len(hypotheses) != len(references):
        raise LengthMismatchError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    correct = [0] * cfg.max_ngram
    total = [0] * cfg.max_ngram
    hl = rl = 0
    for h, r in zip(hypotheses, references):
        c, t, a, b = bleu_stats(h, r, cfg.max_ngram)
        correct = [x + y for x, y in zip(correct, c)]
        total = [x + y for x, y in zip(total, t)]
        hl += a
        rl += b
    return bleu_from_stats(correct, total, hl, rl, "none")


def _char_ngrams(s: str, n: int) -> Counter:
    return Counter(s[i:i + n] for i in range(len(s) - n + 1))


def chrf(cfg: ChrfConfig, hypothesis: str, reference: str) -> float:
    hyp = re.sub(r"\s+", "", hypothesis)
    ref = re.sub(r"\s+", "", reference)
    if hyp == ref:
        return 100.0
    prec = rec = 0.0
    orders = 0
    for n in range(1, cfg.char_ngram_order + 1):
        r = _char_ngrams(ref, n)
        ref_count = sum(r.values())
        if ref_count == 0:
            continue
        h = _char_ngrams(hyp, n)
        hyp_count = sum(h.values())
        match = sum((h & r).values())
        prec += match / hyp_count if hyp_count else 0.0
        rec += match / ref_count
        orders += 1
    if orders == 0:
        return 0.0
    prec /= orders
    rec /= orders
    if prec + rec == 0.0:
        return 0.0
    b2 = cfg.beta**2
    return 100.0 * (1 + b2) * prec * rec / (b2 * prec + rec)
