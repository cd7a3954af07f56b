"""Compiled vs pure-Python search kernels.

Two measurements per backend:

* ``kernel``: repeated UCT descents + backups over a fixed, fully built tree
  (isolates the hot loop);
* ``bats``: end-to-end BATS decodes on seeded toy instances (includes model
  lookups and objective scoring, which do not depend on the backend).

Run ``python3 benchmarks/bench_kernels.py [--vocab 64 --repeat 3]``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from seqsearch.core import Sequence
from seqsearch.harness.instances import build_instances, toy_vocabulary
from seqsearch.models import seeded_model
from seqsearch.objectives import MaxRank
from seqsearch.search import SearchBudget, ats_iteration, bats_decode, init_search, kernels


def _grown_tree(vocab_size: int, iterations: int):
    vocab = toy_vocabulary(vocab_size)
    model = seeded_model(vocab, 2, 11)
    src = Sequence((0,), vocab.eos_id)
    state = init_search(model, MaxRank(model), src, 12)
    for _ in range(iterations):
        ats_iteration(state)
    return state


def bench_kernel(backend: str, vocab_size: int, walks: int) -> float:
    state = _grown_tree(vocab_size, 300)
    t = state.tree
    impl = kernels.backends()[backend]
    path = np.empty(state.max_len + 3, dtype=np.int64)
    # work on copies so every backend sees the same tree
    n, v, d, w = t.n.copy(), t.v.copy(), t.d.copy(), t.witness.copy()
    start = time.perf_counter()
    for _ in range(walks):
        status, length, _ = impl.descend(t.root, t.children, t.policy, n, v, d, t.depth, t.cont, t.flags,
                                         1.0, -1, 0, state.max_len, t.eos_id, path)
        impl.backup(int(path[length - 1]), t.root, t.parent, n, v, d, w)
    return time.perf_counter() - start


def bench_bats(backend: str, count: int, k: int) -> float:
    fam = build_instances(0, count, vocab_size=6, order=1, max_len=5)
    model = fam.model
    objective = MaxRank(model)
    start = time.perf_counter()
    with kernels.use_backend(backend):
        for src in fam.sources:
            bats_decode(model, objective, src, SearchBudget(k, 5), 5)
    return time.perf_counter() - start


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vocab", type=int, default=64)
    ap.add_argument("--walks", type=int, default=5000)
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--k", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    names = sorted(kernels.backends())
    print(f"backends: {', '.join(names)}")
    results = {}
    for name in names:
        kt = min(bench_kernel(name, args.vocab, args.walks) for _ in range(args.repeat))
        bt = min(bench_bats(name, args.instances, args.k) for _ in range(args.repeat))
        results[name] = (kt, bt)
        print(f"{name:>8}  kernel {kt * 1e6 / args.walks:9.2f} us/walk   bats {bt:7.3f} s")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speedup   kernel x{py[0] / cy[0]:.1f}   bats x{py[1] / cy[1]:.2f}")


if __name__ == "__main__":
    main()
