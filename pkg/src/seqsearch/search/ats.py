"""Adaptive tree search (ATS) and its depth-floored beam variant (BATS).

A deterministic MCTS: each inserted node gets a single greedy playout scored
by the objective, values back up by max, and children are picked by a
continuous UCT rule whose prior is the model's next-token distribution.
Unvisited children are valued from the best visited sibling scaled by the
policy ratio (``value_estimate="ratio"``) or shifted by the log policy
ratio (``"log_offset"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import ScoredHypothesis, Sequence
from ..cost import CostMeter
from ..models import greedy_rollout
from . import kernels
from .common import DecodeResult, NoSelectableChildError, SearchBudget, TraceRow
from .tree import CAPPED, TERMINAL, Playout, SearchTree

POLICY_MODES = ("prob", "logprob")


class InvariantViolation(AssertionError):
    pass


def uct_value(v_bar: float, parent_n: int, child_n: int, pi: float, C: float) -> float:
    return v_bar + C * math.sqrt(parent_n) / (1.0 + child_n) * pi


@dataclass
class SearchState:
    """Everything one decode mutates: tree, meter, incumbent and settings."""

    model: object
    objective: object
    source: Sequence
    max_len: int
    C: float
    value_mode: int
    policy_mode: str
    depth_cap: int
    tree: SearchTree
    meter: CostMeter
    best: ScoredHypothesis | None = None
    nodes_expanded: int = 0
    trace: list = field(default_factory=list)
    check: bool = False

    def policy_row(self, dist):
        if self.policy_mode == "prob":
            return dist
        with np.errstate(divide="ignore"):
            return np.log(dist)

    def offer(self, seq: Sequence, score: float) -> None:
        if self.best is None or score > self.best.score:
            self.best = ScoredHypothesis(seq, score)


def init_search(model, objective, source, max_len: int, *, C: float = 1.0, value_estimate: str = "ratio",
                policy: str = "prob", depth_cap: int | None = None, meter: CostMeter | None = None,
                check: bool = False) -> SearchState:
    """Create the tree with its root: visit count 1, value = greedy playout score."""
    if value_estimate not in kernels.VALUE_MODES:
        raise ValueError(f"value_estimate must be one of {sorted(kernels.VALUE_MODES)}")
    if policy not in POLICY_MODES:
        raise ValueError(f"policy must be one of {POLICY_MODES}")
    meter = meter if meter is not None else CostMeter(max_len + 1)
    meter.playout_mode = True
    cap = max_len + 1 if depth_cap is None else min(depth_cap, max_len + 1)
    tree = SearchTree(len(model.vocab), model.eos_id)
    state = SearchState(model, objective, source, max_len, float(C), kernels.VALUE_MODES[value_estimate],
                        policy, cap, tree, meter, check=check)
    root_prefix = Sequence.empty(model.eos_id)
    seq, dists = greedy_rollout(model, source, root_prefix, max_len, meter)
    score = objective.score(source, seq)
    meter.charge_objective_eval()
    meter.charge_fresh_playout()
    pid = tree.add_playout(Playout(seq, score, 0, dists))
    tree.add_node(-1, -1, (), value=score, witness=pid, playout=pid,
                  policy_row=state.policy_row(dists[0]), cont=seq[0], flags=0)
    state.offer(seq, score)
    return state


def _expand(state: SearchState, parent: int, tok: int) -> tuple[int, float]:
    tree = state.tree
    eos = tree.eos_id
    prefix = tree.prefixes[parent] + (tok,)
    depth = len(prefix)
    terminal = tok == eos
    parent_play = tree.playouts[int(tree.playout_id[parent])]
    pseq = parent_play.sequence.token_ids

    if len(pseq) >= depth and pseq[:depth] == prefix:
        # child lies on the parent's playout: reuse it at no cost
        pid = int(tree.playout_id[parent])
        play = parent_play
        dist = None if terminal else play.dists[depth - play.start_depth]
    else:
        if terminal:
            seq, dists = Sequence(prefix, eos), []
        else:
            seq, dists = greedy_rollout(state.model, state.source, Sequence(prefix, eos), state.max_len, state.meter)
        score = state.objective.score(state.source, seq)
        state.meter.charge_objective_eval()
        state.meter.charge_fresh_playout()
        play = Playout(seq, score, depth, dists)
        pid = tree.add_playout(play)
        dist = None if terminal else dists[0]
        state.offer(seq, score)

    if terminal:
        flags, cont, row = TERMINAL, -1, None
    else:
        flags = CAPPED if depth >= state.depth_cap else 0
        cont = play.sequence[depth]
        row = state.policy_row(dist)
    child = tree.add_node(parent, tok, prefix, value=play.score, witness=pid, playout=pid,
                          policy_row=row, cont=cont, flags=flags)
    state.nodes_expanded += 1
    return child, play.score


def ats_iteration(state: SearchState, d_min: int | None = None, root: int | None = None) -> tuple[int, float]:
    """One selection / expansion+playout / backup pass.

    Returns the inserted (or revisited) node and the score it contributed.
    Raises :class:`NoSelectableChildError` when the depth floor excludes
    every child of the root.
    """
    tree = state.tree
    root = tree.root if root is None else root
    path = np.empty(state.max_len + 3, dtype=np.int64)
    status, length, tok = kernels.descend(
        root, tree.children, tree.policy, tree.n, tree.v, tree.d, tree.depth, tree.cont, tree.flags,
        state.C, -1 if d_min is None else d_min, state.value_mode, state.max_len, tree.eos_id, path)
    last = int(path[length - 1])
    if status == kernels.NO_CHILD:
        if last != root:
            raise InvariantViolation(f"selection stuck below the root at node {last}")
        raise NoSelectableChildError(f"no child of the root is deeper than d_min={d_min}")
    if status == kernels.REVISIT:
        tree.n[last] += 1
        leaf, score = last, float(tree.v[last])
    else:
        leaf, score = _expand(state, last, int(tok))
    kernels.backup(leaf, root, tree.parent, tree.n, tree.v, tree.d, tree.witness)
    if state.check:
        check_invariants(state, root)
    return leaf, score


def uct_select_child(state: SearchState, node: int, d_min: int | None = None) -> int:
    tree = state.tree
    return int(kernels.select_token(node, tree.children, tree.policy, tree.n, tree.v, tree.d, tree.depth,
                                    tree.cont, state.C, -1 if d_min is None else d_min, state.value_mode,
                                    state.max_len, tree.eos_id))


def check_invariants(state: SearchState, root: int | None = None) -> None:
    """Visit identity, depth bookkeeping and value witnesses over the live subtree."""
    tree = state.tree
    for i in tree.subtree(root):
        kids = tree.child_ids(i)
        if not kids and tree.n[i] > 1 and not tree.flags[i]:
            raise InvariantViolation(f"expandable node {i} visited {tree.n[i]} times has no children")
        if kids:
            total = sum(int(tree.n[c]) for c in kids.values())
            if total != tree.n[i] - 1:
                raise InvariantViolation(f"node {i}: children visits {total} != n-1 = {tree.n[i] - 1}")
        if tree.n[i] < 1:
            raise InvariantViolation(f"node {i} has n={tree.n[i]}")
        if tree.d[i] < tree.depth[i]:
            raise InvariantViolation(f"node {i}: d={tree.d[i]} < depth={tree.depth[i]}")
        for c in kids.values():
            if tree.d[i] < tree.d[c]:
                raise InvariantViolation(f"node {i}: d below child {c}")
        witness = tree.playouts[int(tree.witness[i])]
        seq, score = witness.sequence, witness.score
        if score != tree.v[i]:
            raise InvariantViolation(f"node {i}: v={tree.v[i]} but witness scores {score}")
        prefix = tree.prefixes[i]
        if seq.token_ids[: len(prefix)] != prefix:
            raise InvariantViolation(f"node {i}: witness does not pass through the node")
        rescored = state.objective.score(state.source, seq)
        if rescored != score:
            raise InvariantViolation(f"node {i}: witness rescored to {rescored}, stored {score}")


def _record(state: SearchState, iteration: int, d_min: int) -> None:
    state.trace.append(TraceRow(iteration, d_min, state.best.score, state.tree.size, state.meter.units()))


def _result(state: SearchState, iterations: int, stopped: bool) -> DecodeResult:
    m = state.meter
    return DecodeResult(state.best, state.nodes_expanded, float(m.fresh_playouts), m.raw_units(), m,
                        state.trace, iterations, stopped)


def bats_decode(model, objective, source: Sequence, budget: SearchBudget, max_len: int, *,
                value_estimate: str = "ratio", policy: str = "prob", meter: CostMeter | None = None,
                check: bool = False) -> DecodeResult:
    """Single tree, no commitment; the depth floor rises by one every k iterations.

    Nodes at depth ``budget.max_depth`` are never expanded, so search ends
    after at most ``k * max_depth`` iterations, or earlier when no root
    child reaches below the floor.
    """
    state = init_search(model, objective, source, max_len, C=budget.exploration_c,
                        value_estimate=value_estimate, policy=policy, depth_cap=budget.max_depth,
                        meter=meter, check=check)
    k = budget.iterations_per_step
    total = k * budget.max_depth
    if budget.max_iterations is not None:
        total = min(total, budget.max_iterations)
    done = 0
    stopped = False
    for t in range(total):
        d_min = t // k
        try:
            ats_iteration(state, d_min)
        except NoSelectableChildError:
            stopped = True
            break
        done += 1
        _record(state, done, d_min)
    return _result(state, done, stopped)


def ats_decode(model, objective, source: Sequence, budget: SearchBudget, max_len: int, *,
               value_estimate: str = "ratio", policy: str = "prob", meter: CostMeter | None = None,
               check: bool = False) -> DecodeResult:
    """Per-token ATS: k iterations, commit to the best root child, repeat until EOS.

    Committing re-roots the tree at the chosen child and keeps its subtree.
    The trace's ``d_min`` column holds the committed prefix length.
    """
    state = init_search(model, objective, source, max_len, C=budget.exploration_c,
                        value_estimate=value_estimate, policy=policy, meter=meter, check=check)
    tree = state.tree
    k = budget.iterations_per_step
    cap = budget.max_iterations
    done = 0
    root = tree.root
    while not tree.flags[root] & TERMINAL:
        for _ in range(k):
            if cap is not None and done >= cap:
                break
            ats_iteration(state, None, root)
            done += 1
            _record(state, done, int(tree.depth[root]))
        kids = tree.child_ids(root)
        if not kids:
            break
        best_tok = max(kids, key=lambda t: (tree.v[kids[t]], -t))
        root = kids[best_tok]
        tree.root = root
        if cap is not None and done >= cap:
            break
    return _result(state, done, False)
