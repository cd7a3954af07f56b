"""Complete-sequence objectives s(x, y).

Objectives are small immutable callables with ``score(source, y)`` and an
``is_additive`` flag.  Only the direct model's plain log-probability
(alpha = 0) is additive in the sense beam search relies on: its partial
scores are exactly the beam's ranking scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence as _Seq

import numpy as np

from .core import Sequence, Vocabulary, decode_text
from .metrics import BleuConfig, ChrfConfig, chrf, sentence_bleu
from .models import ConditionalTokenModel, sequence_log_prob, step_log_probs

AGGREGATIONS = ("min", "max")


@dataclass(frozen=True)
class LengthNormConfig:
    alpha: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


def length_factor(alpha: float, length: int) -> float:
    return (6.0 / (5.0 + length)) ** alpha


def ar_logprob_score(model, cfg: LengthNormConfig, source, y: Sequence, max_len: int | None = None) -> float:
    lp = sequence_log_prob(model, source, y, max_len)
    if cfg.alpha == 0.0:
        return lp
    return lp * length_factor(cfg.alpha, len(y))


def token_rank(dist: np.ndarray, chosen: int) -> float:
    """Fraction of the vocabulary with strictly lower probability than ``chosen``."""
    return float(np.count_nonzero(dist < dist[chosen])) / len(dist)


def smoothed_rank(dist: np.ndarray, chosen: int) -> float:
    return (np.count_nonzero(dist < dist[chosen]) + 1.0) / (len(dist) + 1.0)


def step_log_ranks(model, source, y: Sequence) -> list[float]:
    ids = y.token_ids
    return [math.log(smoothed_rank(model.distribution(source, ids[:i]), tok)) for i, tok in enumerate(ids)]


def max_rank_score(model, source, y: Sequence, aggregation: str = "min") -> float:
    if not y.terminated:
        raise ValueError("max_rank_score needs a terminated sequence")
    logs = step_log_ranks(model, source, y)
    if aggregation == "min":
        return min(logs)
    if aggregation == "max":
        return max(logs)
    raise ValueError(f"unknown aggregation {aggregation!r}")


def min_prob_score(model, source, y: Sequence, max_len: int | None = None) -> float:
    if not y.terminated:
        raise ValueError("min_prob_score needs a terminated sequence")
    return min(step_log_probs(model, source, y, max_len))


def noisy_channel_score(channel_model, language_model, source: Sequence, y: Sequence,
                        max_len: int | None = None) -> tuple[float, float]:
    """(log p(x|y), log p(y)): the channel reads y as its source and scores x."""
    if not y.terminated:
        raise ValueError("noisy_channel_score needs a terminated sequence")
    cm_eos = channel_model.eos_id
    x = Sequence(source.content_ids + (cm_eos,), cm_eos)
    channel_src = Sequence(y.content_ids, y.eos_id)
    return (
        sequence_log_prob(channel_model, channel_src, x),
        sequence_log_prob(language_model, y, y, max_len),
    )


class Objective:
    name = "objective"
    is_additive = False

    def score(self, source: Sequence, y: Sequence) -> float:
        raise NotImplementedError

    def __call__(self, source, y):
        return self.score(source, y)


@dataclass(frozen=True)
class ArLogProb(Objective):
    model: ConditionalTokenModel
    cfg: LengthNormConfig = field(default_factory=LengthNormConfig)
    max_len: int | None = None

    @property
    def name(self):
        return f"ar_logprob(alpha={self.cfg.alpha:g})"

    @property
    def is_additive(self):
        return self.cfg.alpha == 0.0

    def score(self, source, y):
        return ar_logprob_score(self.model, self.cfg, source, y, self.max_len)


@dataclass(frozen=True)
class MaxRank(Objective):
    model: ConditionalTokenModel
    aggregation: str = "min"

    def __post_init__(self):
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")

    @property
    def name(self):
        return f"max_rank({self.aggregation})"

    def score(self, source, y):
        return max_rank_score(self.model, source, y, self.aggregation)


@dataclass(frozen=True)
class MinProb(Objective):
    model: ConditionalTokenModel
    max_len: int | None = None
    name = "min_prob"

    def score(self, source, y):
        return min_prob_score(self.model, source, y, self.max_len)


@dataclass(frozen=True)
class ChannelLogProb(Objective):
    channel_model: ConditionalTokenModel
    name = "channel"

    def score(self, source, y):
        eos = self.channel_model.eos_id
        x = Sequence(source.content_ids + (eos,), eos)
        return sequence_log_prob(self.channel_model, Sequence(y.content_ids, y.eos_id), x)


@dataclass(frozen=True)
class LmPrior(Objective):
    language_model: ConditionalTokenModel
    max_len: int | None = None
    name = "lm_prior"

    def score(self, source, y):
        return sequence_log_prob(self.language_model, y, y, self.max_len)


def _ref_key(source: Sequence) -> tuple[int, ...]:
    return source.content_ids


@dataclass(frozen=True)
class _OracleBase(Objective):
    vocab: Vocabulary
    references: Mapping[tuple[int, ...], Sequence]

    @classmethod
    def for_pairs(cls, vocab, pairs, **kw):
        return cls(vocab, {_ref_key(src): ref for src, ref in pairs}, **kw)

    def _texts(self, source, y):
        ref = self.references[_ref_key(source)]
        return decode_text(self.vocab, y, strip_eos=True), decode_text(self.vocab, ref, strip_eos=True)


@dataclass(frozen=True)
class OracleBleu(_OracleBase):
    cfg: BleuConfig = field(default_factory=BleuConfig)
    name = "oracle_bleu"

    def score(self, source, y):
        return sentence_bleu(self.cfg, *self._texts(source, y))


@dataclass(frozen=True)
class OracleChrf(_OracleBase):
    cfg: ChrfConfig = field(default_factory=ChrfConfig)
    name = "oracle_chrf"

    def score(self, source, y):
        return chrf(self.cfg, *self._texts(source, y))


def oracle_bleu_score(vocab: Vocabulary, reference: Sequence, source, y: Sequence,
                      cfg: BleuConfig | None = None) -> float:
    return sentence_bleu(cfg or BleuConfig(), decode_text(vocab, y, strip_eos=True),
                         decode_text(vocab, reference, strip_eos=True))


@dataclass(frozen=True)
class LogLinearWeights:
    components: tuple[tuple[Objective, float], ...]

    def __post_init__(self):
        comps = tuple((obj, float(w)) for obj, w in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("log-linear model needs at least one component")
        if any(not math.isfinite(w) for _, w in comps):
            raise ValueError("weights must be finite")


def log_linear_score(weights: LogLinearWeights, source, y) -> float:
    total = 0.0
    for obj, w in weights.components:
        if w == 0.0:
            continue
        s = obj.score(source, y)
        if s == -math.inf and w > 0:
            return -math.inf
        total += w * s
    return total


@dataclass(frozen=True)
class LogLinear(Objective):
    weights: LogLinearWeights

    @property
    def name(self):
        parts = [f"{w:g}*{obj.name}" for obj, w in self.weights.components]
        return "+".join(parts)

    @property
    def is_additive(self):
        active = [(o, w) for o, w in self.weights.components if w != 0.0]
        return len(active) == 1 and active[0][1] > 0 and active[0][0].is_additive

    def score(self, source, y):
        return log_linear_score(self.weights, source, y)


def build_objective(spec: _Seq[Mapping], direct_model, channel_model=None, language_model=None,
                    vocab: Vocabulary | None = None, pairs=(), max_len: int | None = None) -> Objective:
    """Build an objective from ``[{type, params, weight}, ...]`` entries."""
    comps = []
    for entry in spec:
        kind = entry["type"]
        params = dict(entry.get("params") or {})
        weight = float(entry.get("weight", 1.0))
        if kind == "ar_logprob":
            obj = ArLogProb(direct_model, LengthNormConfig(float(params.get("alpha", 0.0))), max_len)
        elif kind == "max_rank":
            obj = MaxRank(direct_model, params.get("aggregation", "min"))
        elif kind == "min_prob":
            obj = MinProb(direct_model, max_len)
        elif kind == "channel":
            if channel_model is None:
                raise ValueError("objective 'channel' needs a channel model")
            obj = ChannelLogProb(channel_model)
        elif kind == "lm_prior":
            if language_model is None:
                raise ValueError("objective 'lm_prior' needs a language model")
            obj = LmPrior(language_model, max_len)
        elif kind in ("oracle_bleu", "oracle_chrf"):
            cls = OracleBleu if kind == "oracle_bleu" else OracleChrf
            obj = cls.for_pairs(vocab or direct_model.vocab, pairs)
        else:
            raise ValueError(f"unknown objective type {kind!r}")
        comps.append((obj, weight))
    if len(comps) == 1 and comps[0][1] == 1.0:
        return comps[0][0]
    return LogLinear(LogLinearWeights(tuple(comps)))
