"""Reproducible toy translation instances for oracle-based checks.

A family is one source-conditioned tabular model plus a corpus of distinct
source sentences.  Each source gets its own rows in the table, so a single
model file serves the whole corpus.  The reference for a source is the
exhaustive argmax of its log-probability, which makes oracle BLEU meaningful.
"""

from __future__ import annotations

import itertools
import json
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import ScoredHypothesis, Sequence, Vocabulary, decode_text
from ..models import TabularMarkovModel, save_tabular_model, seeded_model, tabulate
from ..objectives import ArLogProb, LengthNormConfig
from ..search.decoders import exhaustive_decode

MODEL_FILE = "model.tsv"
SOURCE_FILE = "source.txt"
REFERENCE_FILE = "reference.txt"
CONFIG_FILE = "config.json"


@dataclass
class InstanceFamily:
    model: TabularMarkovModel
    sources: list[Sequence]
    references: list[ScoredHypothesis]
    max_len: int

    @property
    def vocab(self) -> Vocabulary:
        return self.model.vocab

    def pairs(self):
        return [(s, r.sequence) for s, r in zip(self.sources, self.references)]


def toy_vocabulary(size: int) -> Vocabulary:
    """``size`` tokens in total: lowercase letters (or w0, w1, ...) plus EOS."""
    if size < 2:
        raise ValueError("vocabulary needs at least one content token plus EOS")
    n = size - 1
    names = list(string.ascii_lowercase[:n]) if n <= 26 else [f"w{i}" for i in range(n)]
    return Vocabulary.from_tokens(names)


def _distinct_sources(rng: np.random.Generator, vocab: Vocabulary, count: int) -> list[Sequence]:
    content = vocab.content_ids
    # shortest length bound that has room for `count` distinct sentences
    max_src = 1
    while sum(len(content) ** j for j in range(1, max_src + 1)) < count:
        max_src += 1
    pool = [body for j in range(1, max_src + 1) for body in itertools.product(content, repeat=j)]
    picks = rng.choice(len(pool), size=count, replace=False)
    return [Sequence(pool[i], vocab.eos_id) for i in sorted(picks)]


def build_instances(seed: int, count: int, vocab_size: int = 4, order: int = 1, max_len: int = 5,
                    enumeration_limit: int = 1_000_000) -> InstanceFamily:
    if count < 1:
        raise ValueError("count must be >= 1")
    vocab = toy_vocabulary(vocab_size)
    model_seed, source_seed = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    sources = _distinct_sources(np.random.default_rng(int(source_seed)), vocab, count)
    model = tabulate(seeded_model(vocab, order, int(model_seed)), sources)
    objective = ArLogProb(model, LengthNormConfig(0.0), max_len)
    refs = [exhaustive_decode(model, objective, s, max_len, limit=enumeration_limit).best for s in sources]
    return InstanceFamily(model, sources, refs, max_len)


def _text(vocab, seq) -> str:
    return decode_text(vocab, seq, strip_eos=True)


def generate_instances(seed: int, count: int, vocab_size: int, order: int, max_len: int, out_dir,
                       enumeration_limit: int = 1_000_000) -> InstanceFamily:
    """Write model, sources, references and a ready-to-run config into ``out_dir``."""
    family = build_instances(seed, count, vocab_size, order, max_len, enumeration_limit)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_tabular_model(family.model, out / MODEL_FILE)
    vocab = family.vocab
    (out / SOURCE_FILE).write_text("".join(_text(vocab, s) + "\n" for s in family.sources), encoding="utf-8")
    (out / REFERENCE_FILE).write_text(
        "".join(_text(vocab, r.sequence) + "\n" for r in family.references), encoding="utf-8")
    config = {
        "direct_model": MODEL_FILE,
        "corpus": SOURCE_FILE,
        "refs": REFERENCE_FILE,
        "objective": [{"type": "ar_logprob", "params": {"alpha": 0.0}, "weight": 1.0}],
        "decoder": "bats",
        "Y": max_len,
        "seed": int(seed),
    }
    (out / CONFIG_FILE).write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return family
