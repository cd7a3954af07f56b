from __future__ import annotations

import numpy as np
import pytest

from seqsearch.core import Sequence, Vocabulary
from seqsearch.harness.instances import build_instances
from seqsearch.models import TabularMarkovModel

SUITE_SEED = 0
SUITE_SIZE = 100

_acceptance_lines: list[str] = []


def report_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    _acceptance_lines.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def suite():
    """The 100-instance oracle suite: vocab 4 incl. EOS, order 1, Y = 5."""
    return build_instances(SUITE_SEED, SUITE_SIZE, vocab_size=4, order=1, max_len=5)


@pytest.fixture
def abc():
    return Vocabulary.from_tokens(["a", "b"])


def two_path_model(vocab: Vocabulary) -> TabularMarkovModel:
    """Locally best first token 'a' leads to the worse completion.

    p(a|e)=0.6, p(b|e)=0.4, p(eos|a)=0.1, p(eos|b)=0.9.
    """
    table = {
        ("*", ()): [0.6, 0.4, 0.0],
        ("*", (0,)): [0.5, 0.4, 0.1],
        ("*", (1,)): [0.05, 0.05, 0.9],
    }
    return TabularMarkovModel(vocab, 1, table)


@pytest.fixture
def two_path(abc):
    return two_path_model(abc)


@pytest.fixture
def empty_src(abc):
    return Sequence.empty(abc.eos_id)


def seq(*ids, eos=2) -> Sequence:
    return Sequence(tuple(ids), eos)


def random_rows(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    rows = rng.random((n, size)) + 1e-3
    return rows / rows.sum(axis=1, keepdims=True)
