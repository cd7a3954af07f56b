"""Conditional next-token models.

A model maps ``(source, prefix)`` to a probability vector over the target
vocabulary.  Models are pure: the same arguments always give the same
(read-only) array, and they keep no cost counters of their own -- callers
pass a :class:`~seqsearch.cost.CostMeter` to :func:`next_distribution`.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .core import EOS, SeqSearchError, Sequence, Vocabulary
from .cost import CostMeter, charge_model_step

DIST_TOL = 1e-9
FILE_ROW_TOL = 1e-6
# probability used for a forced EOS after max_len content tokens when the
# model itself gives EOS (almost) no mass
FORCED_EOS_FLOOR = 1e-12

EPSILON_CTX = "ε"
ANY_SOURCE = "*"


class DistributionError(SeqSearchError, ValueError):
    """A model produced something that is not a probability vector."""


class ModelFileError(SeqSearchError, ValueError):
    def __init__(self, path, lineno: int, msg: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


def check_distribution(probs: np.ndarray, size: int) -> None:
    if probs.shape != (size,):
        raise DistributionError(f"distribution has shape {probs.shape}, expected ({size},)")
    if not np.all(np.isfinite(probs)) or probs.min() < 0.0 or probs.max() > 1.0:
        raise DistributionError("distribution entries must lie in [0, 1]")
    total = float(probs.sum())
    if abs(total - 1.0) > DIST_TOL:
        raise DistributionError(f"distribution sums to {total!r}")


def _frozen(probs) -> np.ndarray:
    arr = np.array(probs, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def source_key(source_vocab: Vocabulary, source: Sequence) -> str:
    return "+".join(source_vocab.tokens[i] for i in source.content_ids)


class ConditionalTokenModel:
    """Base class.  Subclasses implement :meth:`distribution`.

    ``order`` is the number of trailing target tokens the model looks at
    (``math.inf`` for full-context models).
    """

    vocab: Vocabulary
    order: float = math.inf

    def distribution(self, source: Sequence, prefix: tuple[int, ...]) -> np.ndarray:
        raise NotImplementedError

    @property
    def eos_id(self) -> int:
        return self.vocab.eos_id

    def context(self, prefix: tuple[int, ...]) -> tuple[int, ...]:
        if math.isinf(self.order):
            return tuple(prefix)
        k = int(self.order)
        return tuple(prefix[len(prefix) - k:]) if k else ()


class UniformModel(ConditionalTokenModel):
    order = 0

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab
        self._probs = _frozen(np.full(len(vocab), 1.0 / len(vocab)))

    def distribution(self, source, prefix):
        return self._probs


class TabularMarkovModel(ConditionalTokenModel):
    """Order-k table keyed by (source key, last k target tokens).

    Lookup falls back from the exact source key to the ``*`` wildcard and
    finally to the default row, so it never fails.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        order: int,
        table: Mapping[tuple[str, tuple[int, ...]], Iterable[float]],
        default=None,
        source_vocab: Vocabulary | None = None,
    ):
        if order < 0:
            raise ValueError("order must be >= 0")
        self.vocab = vocab
        self.order = int(order)
        self.source_vocab = source_vocab or vocab
        size = len(vocab)
        self.table: dict[tuple[str, tuple[int, ...]], np.ndarray] = {}
        for (src, ctx), row in table.items():
            arr = _frozen(row)
            check_distribution(arr, size)
            ctx = tuple(int(t) for t in ctx)
            if len(ctx) > self.order or vocab.eos_id in ctx:
                raise ValueError(f"invalid context {ctx} for order {order}")
            self.table[(src, ctx)] = arr
        self.default = _frozen(default) if default is not None else _frozen(np.full(size, 1.0 / size))
        check_distribution(self.default, size)

    def distribution(self, source, prefix):
        ctx = self.context(prefix)
        key = source_key(self.source_vocab, source)
        row = self.table.get((key, ctx))
        if row is None:
            row = self.table.get((ANY_SOURCE, ctx), self.default)
        return row


class SeededRandomModel(ConditionalTokenModel):
    """Strictly positive random rows derived from (seed, source, context).

    Each row is the normalisation of exponential draws (a symmetric
    Dirichlet(1) sample) from a Philox stream keyed by the seed and a hash of
    the context, so rows can be regenerated in any order without storage.
    """

    def __init__(self, vocab: Vocabulary, order: int, seed: int, source_vocab: Vocabulary | None = None,
                 source_conditioned: bool = True):
        if order < 0:
            raise ValueError("order must be >= 0")
        self.vocab = vocab
        self.order = int(order)
        self.seed = int(seed) & (2**64 - 1)
        self.source_vocab = source_vocab or vocab
        self.source_conditioned = source_conditioned
        self._cache: dict[tuple[str, tuple[int, ...]], np.ndarray] = {}

    def row(self, key: str, ctx: tuple[int, ...]) -> np.ndarray:
        cached = self._cache.get((key, ctx))
        if cached is not None:
            return cached
        digest = hashlib.blake2b(f"{key}|{','.join(map(str, ctx))}".encode(), digest_size=8).digest()
        stream = np.random.Generator(np.random.Philox(key=(self.seed << 64) | int.from_bytes(digest, "little")))
        draws = stream.standard_exponential(len(self.vocab)) + 1e-12
        probs = _frozen(draws / draws.sum())
        self._cache[(key, ctx)] = probs
        return probs

    def distribution(self, source, prefix):
        key = source_key(self.source_vocab, source) if self.source_conditioned else ""
        return self.row(key, self.context(prefix))


class LanguageModel(ConditionalTokenModel):
    """Wraps a model so that it ignores its source argument."""

    def __init__(self, model: ConditionalTokenModel):
        self.model = model
        self.vocab = model.vocab
        self.order = model.order
        src_vocab = getattr(model, "source_vocab", model.vocab)
        self._empty = Sequence.empty(src_vocab.eos_id)

    def distribution(self, source, prefix):
        return self.model.distribution(self._empty, prefix)


def next_distribution(
    model: ConditionalTokenModel,
    source: Sequence,
    prefix: Sequence | tuple[int, ...],
    meter: CostMeter | None = None,
    check: bool = True,
) -> np.ndarray:
    ids = prefix.token_ids if isinstance(prefix, Sequence) else tuple(prefix)
    if ids and ids[-1] == model.eos_id:
        raise ValueError("prefix is already terminated")
    probs = model.distribution(source, ids)
    if check:
        check_distribution(probs, len(model.vocab))
    charge_model_step(meter)
    return probs


def step_log_probs(model, source, y: Sequence, max_len: int | None = None) -> list[float]:
    """Per-token log-probabilities of ``y``; a forced EOS is floored."""
    out = []
    ids = y.token_ids
    for i, tok in enumerate(ids):
        p = float(model.distribution(source, ids[:i])[tok])
        if max_len is not None and i == max_len and tok == model.eos_id:
            p = max(p, FORCED_EOS_FLOOR)
        out.append(math.log(p) if p > 0.0 else -math.inf)
    return out


def sequence_log_prob(model, source: Sequence, y: Sequence, max_len: int | None = None) -> float:
    if not y.terminated:
        raise ValueError("sequence_log_prob needs a terminated sequence")
    total = 0.0
    for lp in step_log_probs(model, source, y, max_len):
        total += lp
    return total


def greedy_rollout(model, source, prefix: Sequence, max_len: int, meter: CostMeter | None = None):
    """Greedy completion of ``prefix``.

    Returns the terminated sequence and the distributions queried on the way
    (one per appended token, the first belonging to ``prefix`` itself).
    """
    if prefix.terminated:
        return prefix, []
    ids = list(prefix.token_ids)
    dists = []
    eos = model.eos_id
    while True:
        probs = next_distribution(model, source, tuple(ids), meter)
        dists.append(probs)
        if len(ids) >= max_len:
            ids.append(eos)
            break
        tok = int(np.argmax(probs))
        ids.append(tok)
        if tok == eos:
            break
    return Sequence(tuple(ids), eos), dists


def greedy_continuation(model, source, prefix: Sequence, max_len: int, meter: CostMeter | None = None) -> Sequence:
    return greedy_rollout(model, source, prefix, max_len, meter)[0]


# -- tabular files -----------------------------------------------------------

def _parse_row(parts, size, path, lineno):
    if len(parts) != size:
        raise ModelFileError(path, lineno, f"expected {size} probabilities, got {len(parts)}")
    try:
        row = np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError:
        raise ModelFileError(path, lineno, "non-numeric probability") from None
    if not np.all(np.isfinite(row)) or row.min() < 0.0:
        raise ModelFileError(path, lineno, "probabilities must be finite and non-negative")
    total = float(row.sum())
    if abs(total - 1.0) > FILE_ROW_TOL:
        raise ModelFileError(path, lineno, f"row sums to {total!r}, not 1 within {FILE_ROW_TOL}")
    # rows already valid to DIST_TOL are kept bit-exact
    return row if abs(total - 1.0) <= DIST_TOL else row / total


def load_tabular_model(path) -> TabularMarkovModel:
    """Parse the tabular model format (see README)."""
    path = Path(path)
    vocab = src_vocab = None
    order = None
    table = {}
    default = None
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        head = parts[0]
        try:
            if head in ("VOCAB", "SRCVOCAB"):
                toks = parts[1:]
                if EOS not in toks:
                    raise ModelFileError(path, lineno, f"{head} must contain {EOS}")
                v = Vocabulary(tuple(toks), toks.index(EOS))
                if head == "VOCAB":
                    vocab = v
                else:
                    src_vocab = v
            elif head == "ORDER":
                order = int(parts[1])
                if order < 0 or len(parts) != 2:
                    raise ValueError
            elif head in ("CTX", "DEFAULT"):
                if vocab is None or order is None:
                    raise ModelFileError(path, lineno, "VOCAB and ORDER must precede rows")
                size = len(vocab)
                if len(parts) < size + 2 or parts[-size - 1] != "P":
                    raise ModelFileError(path, lineno, "row must end with 'P p1 ... pV'")
                row = _parse_row(parts[-size:], size, path, lineno)
                if head == "DEFAULT":
                    default = row
                    continue
                spec = " ".join(parts[1:-size - 1])
                if "|" not in spec:
                    raise ModelFileError(path, lineno, "context must look like <src-key>|<tokens>")
                src, ctx_text = spec.split("|", 1)
                ctx_toks = ctx_text.split()
                if ctx_toks == [EPSILON_CTX]:
                    ctx_toks = []
                if len(ctx_toks) > order:
                    raise ModelFileError(path, lineno, f"context longer than order {order}")
                ctx = []
                for tok in ctx_toks:
                    if tok not in vocab or tok == vocab.eos:
                        raise ModelFileError(path, lineno, f"bad context token {tok!r}")
                    ctx.append(vocab.id(tok))
                table[(src.strip(), tuple(ctx))] = row
            else:
                raise ModelFileError(path, lineno, f"unknown record {head!r}")
        except ModelFileError:
            raise
        except (ValueError, IndexError) as exc:
            raise ModelFileError(path, lineno, f"malformed line ({exc})") from None
    if vocab is None or order is None:
        raise ModelFileError(path, len(lines), "missing VOCAB or ORDER header")
    return TabularMarkovModel(vocab, order, table, default, src_vocab)


def _fmt_row(row) -> str:
    return " ".join(repr(float(p)) for p in row)


def save_tabular_model(model: TabularMarkovModel, path) -> None:
    vocab = model.vocab
    lines = ["VOCAB " + " ".join(vocab.tokens)]
    if model.source_vocab is not vocab and model.source_vocab != vocab:
        lines.append("SRCVOCAB " + " ".join(model.source_vocab.tokens))
    lines.append(f"ORDER {model.order}")
    for (src, ctx), row in sorted(model.table.items()):
        ctx_text = " ".join(vocab.tokens[i] for i in ctx) if ctx else EPSILON_CTX
        lines.append(f"CTX {src}|{ctx_text} P {_fmt_row(row)}")
    lines.append(f"DEFAULT P {_fmt_row(model.default)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def seeded_model(vocab: Vocabulary, order: int, seed: int, source_vocab: Vocabulary | None = None) -> SeededRandomModel:
    return SeededRandomModel(vocab, order, seed, source_vocab)


def all_contexts(vocab: Vocabulary, order: int) -> list[tuple[int, ...]]:
    """Every context an order-k model can see (shorter ones near the start)."""
    out = [()]
    frontier = [()]
    for _ in range(order):
        frontier = [c + (t,) for c in frontier for t in vocab.content_ids]
        out.extend(frontier)
    return out


def tabulate(model: SeededRandomModel, sources: Iterable[Sequence]) -> TabularMarkovModel:
    """Materialise a seeded model's rows for the given sources."""
    table = {}
    for src in sources:
        key = source_key(model.source_vocab, src)
        for ctx in all_contexts(model.vocab, model.order):
            table[(key, ctx)] = model.row(key, ctx)
    return TabularMarkovModel(model.vocab, model.order, table, None, model.source_vocab)
