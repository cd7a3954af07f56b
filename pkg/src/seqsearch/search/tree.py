"""Arena storage for adaptive tree search.

Node statistics live in flat numpy arrays indexed by node id so the compiled
kernels can walk them without touching Python objects.  Per-node Python data
(prefixes, playout records, witnesses) sits in parallel lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Sequence

TERMINAL = 1
CAPPED = 2  # non-terminal node at the depth cap: never expanded


@dataclass
class Playout:
    sequence: Sequence
    score: float
    start_depth: int
    dists: list  # next-token distributions at depths start_depth, start_depth+1, ...


@dataclass(frozen=True)
class NodeView:
    """Read-only snapshot of one node."""

    index: int
    parent: int | None
    token: int | None
    n: int
    v: float
    d: int
    depth: int
    children: dict
    playout_cache: Sequence | None
    is_terminal: bool
    witness: Sequence


class SearchTree:
    def __init__(self, vocab_size: int, eos_id: int, capacity: int = 64):
        self.V = int(vocab_size)
        self.eos_id = int(eos_id)
        self.size = 0
        self.root = -1
        self._alloc(max(capacity, 4))
        self.prefixes: list[tuple[int, ...]] = []
        # witness ids index this list too: a node's value is always the
        # score of some stored playout passing through it
        self.playouts: list[Playout] = []

    _FIELDS = {
        "parent": (np.int64, -1),
        "token": (np.int64, -1),
        "n": (np.int64, 0),
        "v": (np.float64, -math.inf),
        "d": (np.int64, 0),
        "depth": (np.int64, 0),
        "cont": (np.int64, -1),
        "flags": (np.int8, 0),
        "witness": (np.int64, -1),
        "playout_id": (np.int64, -1),
        "children": (np.int64, -1),
        "policy": (np.float64, 0.0),
    }
    _ROW_FIELDS = ("children", "policy")

    def _alloc(self, cap: int) -> None:
        for name, (dtype, fill) in self._FIELDS.items():
            shape = (cap, self.V) if name in self._ROW_FIELDS else (cap,)
            new = np.full(shape, fill, dtype=dtype)
            old = getattr(self, name, None)
            if old is not None:
                new[: self.size] = old[: self.size]
            setattr(self, name, new)
        self.capacity = cap

    def add_node(self, parent: int, token: int, prefix: tuple[int, ...], *, value: float,
                 witness: int, playout: int, policy_row, cont: int, flags: int) -> int:
        if self.size == self.capacity:
            self._alloc(self.capacity * 2)
        i = self.size
        self.size += 1
        self.parent[i] = parent
        self.token[i] = token
        self.n[i] = 1
        self.v[i] = value
        self.depth[i] = len(prefix)
        self.d[i] = len(prefix)
        self.cont[i] = cont
        self.flags[i] = flags
        self.witness[i] = witness
        self.playout_id[i] = playout
        if policy_row is not None:
            self.policy[i] = policy_row
        self.prefixes.append(prefix)
        if parent >= 0:
            self.children[parent, token] = i
        else:
            self.root = i
        return i

    def add_playout(self, playout: Playout) -> int:
        self.playouts.append(playout)
        return len(self.playouts) - 1

    def is_terminal(self, i: int) -> bool:
        return bool(self.flags[i] & TERMINAL)

    def child_ids(self, i: int) -> dict[int, int]:
        row = self.children[i]
        return {int(t): int(c) for t, c in enumerate(row) if c >= 0}

    def node(self, i: int) -> NodeView:
        pid = int(self.playout_id[i])
        return NodeView(
            index=i,
            parent=None if self.parent[i] < 0 or i == self.root else int(self.parent[i]),
            token=None if self.token[i] < 0 else int(self.token[i]),
            n=int(self.n[i]),
            v=float(self.v[i]),
            d=int(self.d[i]),
            depth=int(self.depth[i]),
            children=self.child_ids(i),
            playout_cache=self.playouts[pid].sequence if pid >= 0 else None,
            is_terminal=self.is_terminal(i),
            witness=self.playouts[int(self.witness[i])].sequence,
        )

    def subtree(self, root: int | None = None):
        """Node ids reachable from ``root`` (default: current root), preorder."""
        stack = [self.root if root is None else root]
        while stack:
            i = stack.pop()
            yield i
            row = self.children[i]
            stack.extend(int(c) for c in row[::-1] if c >= 0)
