"""Token inventories, sequences and scored hypotheses.

Every decoder in the package works on integer token ids drawn from a
:class:`Vocabulary`.  The end-of-sequence token lives inside the vocabulary,
so the set of actions available at any search node is exactly
``range(len(vocab))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence as _Seq

EOS = "</s>"


class SeqSearchError(Exception):
    """Base class for all package errors."""


class UnknownTokenError(SeqSearchError, KeyError):
    def __init__(self, token: str, position: int):
        self.token = token
        self.position = position
        super().__init__(f"unknown token {token!r} at position {position}")

    def __str__(self) -> str:
        return self.args[0]


class TokenRangeError(SeqSearchError, IndexError):
    pass


class TerminatedSequenceError(SeqSearchError, ValueError):
    """Raised when appending to a sequence that already ends with EOS."""


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    eos_id: int
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        if len(tokens) < 2:
            raise ValueError("vocabulary needs at least one content token plus EOS")
        if any(not t or any(c.isspace() for c in t) for t in tokens):
            raise ValueError("tokens must be non-empty and contain no whitespace")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        if not 0 <= self.eos_id < len(tokens):
            raise ValueError(f"eos_id {self.eos_id} out of range")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(tokens)})

    @classmethod
    def from_tokens(cls, content: Iterable[str], eos: str = EOS) -> "Vocabulary":
        """Build a vocabulary with EOS appended after the content tokens."""
        content = [t for t in content if t != eos]
        return cls(tuple(content) + (eos,), len(content))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def eos(self) -> str:
        return self.tokens[self.eos_id]

    @property
    def content_ids(self) -> list[int]:
        return [i for i in range(len(self.tokens)) if i != self.eos_id]

    def id(self, token: str) -> int:
        return self._index[token]

    def __contains__(self, token: str) -> bool:
        return token in self._index


@dataclass(frozen=True)
class Sequence:
    """An immutable run of token ids, optionally closed by EOS.

    ``eos_id`` is carried along so that ``terminated`` can be checked and so
    that :meth:`append` can refuse to grow a finished sequence.
    """

    token_ids: tuple[int, ...]
    eos_id: int

    def __post_init__(self):
        ids = tuple(int(i) for i in self.token_ids)
        object.__setattr__(self, "token_ids", ids)
        if self.eos_id in ids[:-1]:
            raise ValueError("EOS may only appear in final position")

    @classmethod
    def empty(cls, eos_id: int) -> "Sequence":
        return cls((), eos_id)

    @property
    def terminated(self) -> bool:
        return bool(self.token_ids) and self.token_ids[-1] == self.eos_id

    @property
    def content_length(self) -> int:
        return len(self.token_ids) - int(self.terminated)

    @property
    def content_ids(self) -> tuple[int, ...]:
        return self.token_ids[:-1] if self.terminated else self.token_ids

    def append(self, token_id: int) -> "Sequence":
        if self.terminated:
            raise TerminatedSequenceError("cannot append to a terminated sequence")
        return Sequence(self.token_ids + (int(token_id),), self.eos_id)

    def __len__(self) -> int:
        return len(self.token_ids)

    def __iter__(self):
        return iter(self.token_ids)

    def __getitem__(self, i):
        return self.token_ids[i]


@dataclass(frozen=True)
class ScoredHypothesis:
    sequence: Sequence
    score: float

    def __post_init__(self):
        if not self.sequence.terminated:
            raise ValueError("hypotheses must be terminated sequences")
        if math.isnan(self.score):
            raise ValueError("hypothesis score is NaN")


def encode(vocab: Vocabulary, text: str) -> Sequence:
    ids = []
    for pos, tok in enumerate(text.split(), start=1):
        try:
            ids.append(vocab.id(tok))
        except KeyError:
            raise UnknownTokenError(tok, pos) from None
    return Sequence(tuple(ids), vocab.eos_id)


def decode_text(vocab: Vocabulary, seq: Sequence | _Seq[int], strip_eos: bool = False) -> str:
    ids = seq.token_ids if isinstance(seq, Sequence) else tuple(seq)
    out = []
    for i in ids:
        if not 0 <= i < len(vocab):
            raise TokenRangeError(f"token id {i} out of range for vocabulary of size {len(vocab)}")
        if strip_eos and i == vocab.eos_id:
            continue
        out.append(vocab.tokens[i])
    return " ".join(out)


def read_corpus(path, vocab: Vocabulary) -> list[Sequence]:
    """Read one pre-tokenized sentence per line; EOS is implicit and not added."""
    with open(path, encoding="utf-8") as fh:
        return [encode(vocab, line) for line in fh.read().splitlines()]
