"""Greedy, beam, rerank and exhaustive decoders."""

from __future__ import annotations

import itertools
import math

from ..core import ScoredHypothesis, Sequence
from ..cost import CostMeter
from ..models import FORCED_EOS_FLOOR, greedy_rollout, next_distribution
from .common import DecodeResult, EnumerationLimitError

DEFAULT_ENUMERATION_LIMIT = 1_000_000


def _meter(max_len: int, meter: CostMeter | None) -> CostMeter:
    return meter if meter is not None else CostMeter(max_len + 1)


def _log(p: float) -> float:
    return math.log(p) if p > 0.0 else -math.inf


def greedy_decode(model, objective, source: Sequence, max_len: int, meter: CostMeter | None = None) -> DecodeResult:
    meter = _meter(max_len, meter)
    seq, _ = greedy_rollout(model, source, Sequence.empty(model.eos_id), max_len, meter)
    score = objective.score(source, seq)
    meter.charge_objective_eval()
    return DecodeResult(ScoredHypothesis(seq, score), 0, 1.0, meter.raw_units(), meter)


def _better(score, ids, best_score, best_ids) -> bool:
    """Higher score wins; ties go to the lexicographically smaller id tuple."""
    if best_ids is None or score > best_score:
        return True
    return score == best_score and ids < best_ids


def beam_search(model, objective, source: Sequence, b: int, max_len: int,
                meter: CostMeter | None = None) -> DecodeResult:
    """Frontier-synchronous beam search ranked by accumulated log-probability.

    Finished hypotheses leave the frontier for a pool; search stops once the
    pool holds ``b`` entries or the frontier empties.  The returned hypothesis
    is the pool's argmax under ``objective`` (for a non-additive objective
    this is reranking).  Each depth is charged ``b`` model steps, as a padded
    batch of width ``b`` would cost.
    """
    if b < 1:
        raise ValueError("beam size must be >= 1")
    meter = _meter(max_len, meter)
    eos = model.eos_id
    V = len(model.vocab)
    frontier: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    pool: list[tuple[float, tuple[int, ...]]] = []
    while frontier and len(pool) < b:
        candidates = []
        for score, ids in frontier:
            probs = next_distribution(model, source, ids, meter)
            if len(ids) >= max_len:
                candidates.append((score + _log(max(float(probs[eos]), FORCED_EOS_FLOOR)), ids + (eos,)))
                continue
            for tok in range(V):
                candidates.append((score + _log(float(probs[tok])), ids + (tok,)))
        meter.charge_model_step(b - len(frontier))
        candidates.sort(key=lambda c: (-c[0], c[1]))
        frontier = []
        for score, ids in candidates[:b]:
            (pool if ids[-1] == eos else frontier).append((score, ids))
    pool.sort(key=lambda c: (-c[0], c[1]))
    pool = pool[:b]

    best = None
    hyps = []
    for _, ids in pool:
        seq = Sequence(ids, eos)
        s = objective.score(source, seq)
        meter.charge_objective_eval()
        hyps.append(ScoredHypothesis(seq, s))
        if best is None or _better(s, ids, best.score, best.sequence.token_ids):
            best = hyps[-1]
    return DecodeResult(best, 0, float(b), meter.raw_units(), meter, candidates=hyps)


def rerank_decode(model, proxy_b: int, final_objective, source: Sequence, max_len: int,
                  meter: CostMeter | None = None) -> DecodeResult:
    """Beam-search candidates (log-probability ranking) rescored by ``final_objective``."""
    return beam_search(model, final_objective, source, proxy_b, max_len, meter)


def count_sequences(vocab_size: int, max_len: int) -> int:
    content = vocab_size - 1
    return sum(content**j for j in range(max_len + 1))


def enumerate_sequences(vocab_size: int, eos_id: int, max_len: int, reverse: bool = False):
    """Every terminated sequence with at most ``max_len`` content tokens."""
    content = [t for t in range(vocab_size) if t != eos_id]
    if reverse:
        content = content[::-1]
    lengths = range(max_len, -1, -1) if reverse else range(max_len + 1)
    for length in lengths:
        for body in itertools.product(content, repeat=length):
            yield body + (eos_id,)


def exhaustive_decode(model, objective, source: Sequence, max_len: int, *,
                      limit: int = DEFAULT_ENUMERATION_LIMIT, reverse: bool = False,
                      meter: CostMeter | None = None) -> DecodeResult:
    V = len(model.vocab)
    total = count_sequences(V, max_len)
    if total > limit:
        raise EnumerationLimitError(f"{total} sequences exceed the enumeration limit {limit}")
    meter = _meter(max_len, meter)
    eos = model.eos_id
    best_ids = None
    best_score = -math.inf
    for ids in enumerate_sequences(V, eos, max_len, reverse):
        s = objective.score(source, Sequence(ids, eos))
        meter.charge_objective_eval()
        if _better(s, ids, best_score, best_ids):
            best_ids, best_score = ids, s
    best = ScoredHypothesis(Sequence(best_ids, eos), best_score)
    return DecodeResult(best, total, float(total), meter.raw_units(), meter)
