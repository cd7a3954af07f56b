"""Corpus decoding, budget sweeps and decoder comparisons."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import TextIO

from ..core import SeqSearchError, Sequence, UnknownTokenError, decode_text, encode
from ..cost import CostMeter
from ..metrics import BleuConfig, corpus_bleu
from ..models import LanguageModel, ModelFileError, load_tabular_model
from ..objectives import build_objective
from ..search import (
    EnumerationLimitError,
    SearchBudget,
    ats_decode,
    bats_decode,
    beam_search,
    exhaustive_decode,
    greedy_decode,
    rerank_decode,
)
from .config import ConfigError, ExperimentConfig

SWEEP_HEADER = ("decoder", "objective", "budget", "mean_score", "corpus_bleu", "units_raw", "units_closed",
                "sentences", "wall_s", "gain")
SENTENCE_HEADER = ("index", "hypothesis", "score", "units_raw", "units_closed", "nodes", "iterations", "status")
COMPARE_HEADER = ("decoder_a", "decoder_b", "objective", "budget_a", "budget_b", "bleu_a", "bleu_b",
                  "delta_pct", "score_a", "score_b", "score_delta")
TRACE_HEADER = "sentence\titer\td_min\tbest_score\tnodes\tcost_units\n"


class DataError(SeqSearchError):
    """Unreadable or malformed input data (model files, corpora)."""


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass
class Models:
    direct: object
    channel: object | None = None
    language: object | None = None


def _load_model(path):
    try:
        return load_tabular_model(path)
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc.strerror}") from None
    except ModelFileError as exc:
        raise DataError(str(exc)) from None


def load_models(cfg: ExperimentConfig) -> Models:
    if not cfg.direct_model:
        raise ConfigError("config needs a direct_model path")
    direct = _load_model(cfg.direct_model)
    channel = _load_model(cfg.channel_model) if cfg.channel_model else None
    lm = LanguageModel(_load_model(cfg.language_model)) if cfg.language_model else None
    return Models(direct, channel, lm)


def _read_lines(path) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def load_corpus(cfg: ExperimentConfig, models: Models) -> list[tuple[Sequence, Sequence | None]]:
    """Sources (unterminated) paired with EOS-terminated references, if any."""
    if not cfg.corpus:
        raise ConfigError("no corpus given (config 'corpus' or --corpus)")
    src_vocab = getattr(models.direct, "source_vocab", models.direct.vocab)
    vocab = models.direct.vocab
    src_lines = _read_lines(cfg.corpus)
    ref_lines = _read_lines(cfg.refs) if cfg.refs else None
    if ref_lines is not None and len(ref_lines) != len(src_lines):
        raise DataError(f"corpus has {len(src_lines)} lines but references have {len(ref_lines)}")
    pairs = []
    for i, line in enumerate(src_lines):
        try:
            src = encode(src_vocab, line)
            ref = None
            if ref_lines is not None:
                ref = encode(vocab, ref_lines[i])
                ref = Sequence(ref.token_ids + (vocab.eos_id,), vocab.eos_id)
        except UnknownTokenError as exc:
            raise DataError(f"line {i + 1}: {exc}") from None
        except ValueError as exc:
            raise DataError(f"line {i + 1}: {exc}") from None
        pairs.append((src, ref))
    return pairs


def make_objective(cfg: ExperimentConfig, models: Models, corpus):
    needs_refs = any(e["type"].startswith("oracle_") for e in cfg.objective)
    if needs_refs and any(ref is None for _, ref in corpus):
        raise ConfigError("oracle objectives need references (config 'refs' or --refs)")
    try:
        return build_objective(list(cfg.objective), models.direct, models.channel, models.language,
                               models.direct.vocab, [p for p in corpus if p[1] is not None], cfg.Y)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad objective: {exc}") from None


def search_budget(cfg: ExperimentConfig, decoder: str, budget: int) -> SearchBudget:
    """Map a grid point to a tree-search budget.

    ``per_depth``: the grid value is k.  ``total``: the grid value caps the
    total iteration count and k is spread over the steps.
    """
    if cfg.k_semantics == "per_depth":
        return SearchBudget(budget, cfg.depth_cap, cfg.C)
    steps = cfg.depth_cap if decoder == "bats" else cfg.Y + 1
    return SearchBudget(max(1, math.ceil(budget / steps)), cfg.depth_cap, cfg.C, max_iterations=budget)


def decode_sentence(cfg: ExperimentConfig, decoder: str, budget: int, model, objective, source: Sequence):
    meter = CostMeter(cfg.Y + 1, cfg.a_weight, cfg.b_weight)
    Y = cfg.Y
    if decoder == "greedy":
        return greedy_decode(model, objective, source, Y, meter)
    if decoder == "beam":
        return beam_search(model, objective, source, budget, Y, meter)
    if decoder == "rerank":
        return rerank_decode(model, budget, objective, source, Y, meter)
    if decoder == "exhaustive":
        return exhaustive_decode(model, objective, source, Y, limit=cfg.enumeration_limit, meter=meter)
    sb = search_budget(cfg, decoder, budget)
    run = bats_decode if decoder == "bats" else ats_decode
    return run(model, objective, source, sb, Y, value_estimate=cfg.value_estimate, policy=cfg.policy,
               meter=meter)


@dataclass
class SentenceResult:
    index: int
    hypothesis: str | None
    score: float | None
    units_raw: float | None
    units_closed: float | None
    nodes: int | None
    iterations: int | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def row(self) -> list[str]:
        status = "ok" if self.ok else f"FAILED: {self.error}"
        return [fmt(x) for x in (self.index, self.hypothesis, self.score, self.units_raw, self.units_closed,
                                 self.nodes, self.iterations)] + [status]


@dataclass
class DecodeReport:
    decoder: str
    objective: str
    budget: int
    sentences: list[SentenceResult]
    mean_score: float | None
    corpus_bleu: float | None
    units_raw: float | None
    units_closed: float | None
    wall_s: float

    @property
    def successes(self) -> int:
        return sum(s.ok for s in self.sentences)

    @property
    def failures(self) -> int:
        return len(self.sentences) - self.successes

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SENTENCE_HEADER)
        for s in self.sentences:
            w.writerow(s.row())


def _mean(xs):
    return math.fsum(xs) / len(xs) if xs else None


def _mean_score(xs):
    # fsum cannot take -inf mixed with finite values gracefully
    if not xs:
        return None
    if any(x == -math.inf for x in xs):
        return -math.inf
    return math.fsum(xs) / len(xs)


def run_decode(cfg: ExperimentConfig, corpus=None, *, decoder: str | None = None, budget: int | None = None,
               models: Models | None = None, objective=None, trace: TextIO | None = None,
               trace_header: bool = True) -> DecodeReport:
    """Decode every sentence once with one decoder at one budget.

    Enumeration-limit failures are recorded per sentence; aggregates are
    computed over the successful sentences only.
    """
    models = models or load_models(cfg)
    corpus = corpus if corpus is not None else load_corpus(cfg, models)
    objective = objective or make_objective(cfg, models, corpus)
    decoder = decoder or cfg.decoder[0]
    budget = budget if budget is not None else cfg.budgets[0]
    vocab = models.direct.vocab
    started = time.perf_counter()
    results = []
    if trace is not None and trace_header:
        trace.write(TRACE_HEADER)
    for i, (src, _) in enumerate(corpus):
        try:
            res = decode_sentence(cfg, decoder, budget, models.direct, objective, src)
        except EnumerationLimitError as exc:
            results.append(SentenceResult(i, None, None, None, None, None, None, str(exc)))
            continue
        hyp = decode_text(vocab, res.best.sequence, strip_eos=True)
        results.append(SentenceResult(i, hyp, res.best.score, res.units_raw, res.cost_units,
                                      res.nodes_expanded, res.iterations))
        if trace is not None:
            for row in res.trace:
                trace.write(f"{i}\t{row.tsv()}\n")
    ok = [r for r in results if r.ok]
    bleu = None
    if ok and all(ref is not None for _, ref in corpus):
        refs = [decode_text(vocab, corpus[r.index][1], strip_eos=True) for r in ok]
        bleu = corpus_bleu(BleuConfig(), [r.hypothesis for r in ok], refs)
    wall = time.perf_counter() - started if cfg.timing else 0.0
    return DecodeReport(decoder, objective.name, budget, results, _mean_score([r.score for r in ok]), bleu,
                        _mean([r.units_raw for r in ok]), _mean([r.units_closed for r in ok]), wall)


@dataclass
class SweepRow:
    decoder: str
    objective: str
    budget: int
    mean_score: float | None
    corpus_bleu: float | None
    units_raw: float | None
    units_closed: float | None
    sentences: int
    wall_s: float
    gain: float | None
    failures: int = 0

    def cells(self) -> list[str]:
        return [fmt(getattr(self, name)) for name in SWEEP_HEADER]


@dataclass
class SweepReport:
    rows: list[SweepRow] = field(default_factory=list)

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for row in self.rows:
            w.writerow(row.cells())

    @property
    def failures(self) -> int:
        return sum(r.failures for r in self.rows)


def _gain(cur, prev):
    if cur is None or prev is None:
        return None
    if cur == prev:
        return 0.0
    return cur - prev


def run_sweep(cfg: ExperimentConfig, corpus=None, *, models: Models | None = None,
              trace: TextIO | None = None) -> SweepReport:
    """One corpus decode per (decoder, budget); ``gain`` is the change in mean
    score from the previous budget of the same decoder."""
    models = models or load_models(cfg)
    corpus = corpus if corpus is not None else load_corpus(cfg, models)
    objective = make_objective(cfg, models, corpus)
    report = SweepReport()
    if trace is not None:
        trace.write(TRACE_HEADER)
    for decoder in cfg.decoder:
        prev = None
        for budget in cfg.budgets:
            rep = run_decode(cfg, corpus, decoder=decoder, budget=budget, models=models, objective=objective,
                             trace=trace, trace_header=False)
            report.rows.append(SweepRow(decoder, rep.objective, budget, rep.mean_score, rep.corpus_bleu,
                                        rep.units_raw, rep.units_closed, rep.successes, rep.wall_s,
                                        _gain(rep.mean_score, prev), rep.failures))
            prev = rep.mean_score
    return report


@dataclass
class Comparison:
    decoder_a: str
    decoder_b: str
    objective: str
    best_a: SweepRow
    best_b: SweepRow

    @property
    def delta_pct(self) -> float | None:
        a, b = self.best_a.corpus_bleu, self.best_b.corpus_bleu
        if a is None or b is None:
            return None
        if a == 0.0:
            return 0.0 if b == 0.0 else math.inf
        return (b - a) / a * 100.0

    @property
    def score_delta(self) -> float | None:
        a, b = self.best_a.mean_score, self.best_b.mean_score
        if a is None or b is None:
            return None
        if a == b:
            return 0.0
        return b - a

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_HEADER)
        a, b = self.best_a, self.best_b
        w.writerow([fmt(x) for x in (self.decoder_a, self.decoder_b, self.objective, a.budget, b.budget,
                                     a.corpus_bleu, b.corpus_bleu, self.delta_pct, a.mean_score, b.mean_score,
                                     self.score_delta)])


def _best_row(rows: list[SweepRow]) -> SweepRow:
    """Highest corpus BLEU (mean score without references); ties to the smaller budget."""
    def key(r):
        primary = r.corpus_bleu if r.corpus_bleu is not None else r.mean_score
        return -math.inf if primary is None else primary
    best = rows[0]
    for r in rows[1:]:
        if key(r) > key(best):
            best = r
    return best


def compare_decoders(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig, corpus=None) -> Comparison:
    if cfg_a.objective != cfg_b.objective:
        raise ConfigError("compared configurations must share the objective")
    if cfg_a.direct_model != cfg_b.direct_model:
        raise ConfigError("compared configurations must share the direct model")
    models = load_models(cfg_a)
    corpus = corpus if corpus is not None else load_corpus(cfg_a, models)
    rows_a = run_sweep(cfg_a.override(decoder=cfg_a.decoder[:1]), corpus, models=models).rows
    rows_b = run_sweep(cfg_b.override(decoder=cfg_b.decoder[:1]), corpus, models=models).rows
    return Comparison(cfg_a.decoder[0], cfg_b.decoder[0], rows_a[0].objective, _best_row(rows_a),
                      _best_row(rows_b))
