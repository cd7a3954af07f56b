from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import uct
from seqsearch.core import Sequence, Vocabulary
from seqsearch.models import TabularMarkovModel, seeded_model
from seqsearch.objectives import ArLogProb, LengthNormConfig, MaxRank
from seqsearch.search import (
    NoSelectableChildError,
    SearchBudget,
    ats_decode,
    ats_iteration,
    bats_decode,
    check_invariants,
    greedy_decode,
    init_search,
    uct_select_child,
    uct_value,
)
from seqsearch.search.tree import SearchTree

V4 = Vocabulary.from_tokens(["a", "b", "c"])
SRC = Sequence((2, 0), 3)


def test_uct_worked_examples():
    assert uct_value(-1.0, 4, 1, 0.5, 1.0) == -0.5
    est = -1.0 * (0.25 / 0.5)
    assert est == -0.5
    assert uct_value(est, 4, 0, 0.25, 1.0) == 0.0
    assert uct_value(-1.0, 4, 1, 0.5, 0.0) == -1.0
    assert uct_value(-1.0, 4, 1, 0.5, 1.0) == uct(-1.0, 4, 1, 0.5, 1.0)


def _hand_tree(policy):
    """Root with n=4 and a single visited child 'a' (n=1, v=-1)."""
    t = SearchTree(3, 2)
    t.add_node(-1, -1, (), value=-1.0, witness=0, playout=0, policy_row=np.array(policy), cont=0, flags=0)
    t.add_node(0, 0, (0,), value=-1.0, witness=0, playout=0, policy_row=np.full(3, 1 / 3), cont=0, flags=0)
    t.n[0] = 4
    return t


class _State:
    def __init__(self, tree, C=1.0, mode=0, max_len=5):
        self.tree, self.C, self.value_mode, self.max_len = tree, C, mode, max_len


def test_select_child_unvisited_sibling_wins():
    # a: -1 + 2/2*0.5 = -0.5 ; b: -0.5 + 2*0.25 = 0.0 ; eos: -0.5 + 2*0.25 = 0.0 (tie -> lowest id)
    st_ = _State(_hand_tree([0.5, 0.25, 0.25]))
    assert uct_select_child(st_, 0) == 1


def test_select_child_exploitation_only():
    # C=0: a stays at -1, b and eos are estimated at -0.4 and -0.2
    st_ = _State(_hand_tree([0.5, 0.2, 0.1]), C=0.0)
    assert uct_select_child(st_, 0) == 2


def test_select_child_log_offset():
    # v* + log(pi/pi*): b -> -1 + log 0.5 + 2*0.25, a -> -0.5
    st_ = _State(_hand_tree([0.5, 0.25, 0.25]), mode=1)
    assert -1 + math.log(0.5) + 0.5 < -0.5
    assert uct_select_child(st_, 0) == 0


def test_select_child_depth_floor():
    t = _hand_tree([0.5, 0.25, 0.25])
    # only unvisited children (depth 1) and 'a' (d=1) exist: d_min=1 excludes all
    assert uct_select_child(_State(t), 0, d_min=1) == -1
    t.d[1] = 3
    assert uct_select_child(_State(t), 0, d_min=1) == 0


def _two_path_state(two_path, empty_src, value_estimate="ratio"):
    obj = ArLogProb(two_path, LengthNormConfig(0.0), 2)
    return init_search(two_path, obj, empty_src, 2, value_estimate=value_estimate, check=True)


def test_golden_three_iterations(two_path, empty_src):
    s = _two_path_state(two_path, empty_src)
    t = s.tree
    ln = math.log
    # root playout: a (0.6), a (0.5), forced eos (0.1)
    assert s.best.sequence.token_ids == (0, 0, 2)
    assert t.v[0] == pytest.approx(ln(0.03))
    assert s.meter.units() == 1.0

    # 1: no visited child -> follow the root playout; 'a' is a cache hit
    leaf, score = ats_iteration(s)
    assert t.prefixes[leaf] == (0,)
    assert score == pytest.approx(ln(0.03))
    assert (int(t.n[0]), t.size, s.meter.units()) == (2, 2, 1.0)

    # 2: eos has pi=0, so its ratio estimate is v* * 0 = 0, beating
    #    a: ln .03 + sqrt2/2*.6 and b: ln .03*(.4/.6) + sqrt2*.4
    assert uct(ln(0.03) * 0.0, 2, 0, 0.0, 1) > uct(ln(0.03) * 0.4 / 0.6, 2, 0, 0.4, 1)
    leaf, score = ats_iteration(s)
    assert t.prefixes[leaf] == (2,)
    assert score == -math.inf
    assert t.is_terminal(leaf)
    assert (int(t.n[0]), t.size, s.meter.units()) == (3, 3, 2.0)
    assert t.v[0] == pytest.approx(ln(0.03))

    # 3: b: ln .03*(2/3) + sqrt3*.4 = -1.645 beats a: ln .03 + sqrt3/2*.6 = -2.987
    leaf, score = ats_iteration(s)
    assert t.prefixes[leaf] == (1,)
    assert t.playouts[int(t.witness[leaf])].sequence.token_ids == (1, 2)
    assert score == pytest.approx(ln(0.36))
    assert (int(t.n[0]), t.size, s.meter.units()) == (4, 4, 3.0)
    assert t.v[0] == pytest.approx(ln(0.36))
    assert s.best.sequence.token_ids == (1, 2)


def test_golden_log_offset_second_iteration(two_path, empty_src):
    s = _two_path_state(two_path, empty_src, "log_offset")
    ats_iteration(s)
    # eos estimate is -inf, b: ln .03 + ln(2/3) + sqrt2*.4 < a: ln .03 + sqrt2/2*.6
    leaf, _ = ats_iteration(s)
    assert s.tree.prefixes[leaf] == (0, 0)
    assert s.meter.units() == 1.0


def test_first_iteration_and_counting_identity():
    m = seeded_model(V4, 1, 3)
    s = init_search(m, MaxRank(m), SRC, 4, check=True)
    ats_iteration(s)
    assert s.tree.n[0] == 2 and s.tree.size == 2 and s.tree.n[1] == 1
    for t in range(2, 40):
        ats_iteration(s)
        kids = s.tree.child_ids(0)
        assert s.tree.n[0] == 1 + t
        assert sum(int(s.tree.n[c]) for c in kids.values()) == t


def test_deterministic_model_ats_is_greedy(abc, empty_src):
    m = TabularMarkovModel(abc, 1, {("*", ()): [1.0, 0.0, 0.0], ("*", (0,)): [0.0, 0.0, 1.0]})
    obj = ArLogProb(m)
    r = ats_decode(m, obj, empty_src, SearchBudget(1, 3), 3, check=True)
    assert r.best.sequence.token_ids == (0, 2)
    assert r.best.score == 0.0


@given(st.integers(0, 2**32), st.sampled_from([1, 2, 5, 13]), st.sampled_from(["ratio", "log_offset"]),
       st.sampled_from(["prob", "logprob"]))
@settings(max_examples=30, deadline=None)
def test_tree_search_dominates_greedy_and_keeps_invariants(seed, k, mode, policy):
    m = seeded_model(V4, 1, seed)
    obj = MaxRank(m)
    g = greedy_decode(m, obj, SRC, 4).best.score
    for run in (bats_decode, ats_decode):
        r = run(m, obj, SRC, SearchBudget(k, 4), 4, value_estimate=mode, policy=policy, check=True)
        assert r.best.score >= g
        best = [row.best_score for row in r.trace]
        assert all(a <= b for a, b in zip(best, best[1:]))
        assert r.cost_units <= 1 + r.nodes_expanded
        assert r.units_raw <= r.cost_units


def test_bats_depth_one_cap():
    m = seeded_model(V4, 1, 8)
    obj = MaxRank(m)
    r = bats_decode(m, obj, SRC, SearchBudget(30, 1), 5, check=True)
    assert r.iterations <= 30
    assert r.best.score >= greedy_decode(m, obj, SRC, 5).best.score
    assert max(row.nodes for row in r.trace) <= 1 + len(V4)


def test_bats_k1_stops_after_one_iteration():
    m = seeded_model(V4, 1, 4)
    r = bats_decode(m, MaxRank(m), SRC, SearchBudget(1, 5), 5)
    assert r.stopped_early and r.iterations == 1
    assert r.cost_units == 1.0


@pytest.mark.parametrize("k", [1, 2, 3, 8])
@pytest.mark.parametrize("seed", range(6))
def test_bats_stop_condition_iff(seed, k):
    # content length <= 1: every sequence has at most two tokens
    m = seeded_model(V4, 1, seed)
    obj = MaxRank(m)
    s = init_search(m, obj, SRC, 1, depth_cap=1)
    total = k * 1
    stopped_at = None
    for t in range(total):
        try:
            ats_iteration(s, t // k)
        except NoSelectableChildError:
            stopped_at = t // k
            break
    r = bats_decode(m, obj, SRC, SearchBudget(k, 1), 1)
    assert r.stopped_early == (stopped_at is not None)
    if stopped_at is not None:
        tree = s.tree
        assert all(tree.d[c] <= stopped_at for c in tree.child_ids(0).values())
        assert tree.depth[0] + 1 <= stopped_at


def test_ats_commits_and_stops_at_eos():
    m = seeded_model(V4, 1, 21)
    r = ats_decode(m, MaxRank(m), SRC, SearchBudget(4, 5), 5, check=True)
    depths = [row.d_min for row in r.trace]
    assert depths == sorted(depths)
    assert r.iterations == len(r.trace) <= 4 * 6


def test_max_iterations_caps_total():
    m = seeded_model(V4, 1, 2)
    r = bats_decode(m, MaxRank(m), SRC, SearchBudget(50, 5, max_iterations=7), 5)
    assert r.iterations == 7
    a = ats_decode(m, MaxRank(m), SRC, SearchBudget(50, 5, max_iterations=7), 5)
    assert a.iterations == 7


def test_bats_one_iteration_one_unit():
    m = seeded_model(V4, 1, 2)
    r = bats_decode(m, MaxRank(m), SRC, SearchBudget(50, 5, max_iterations=1), 5)
    assert r.cost_units == 1.0


def test_check_invariants_detects_corruption():
    m = seeded_model(V4, 1, 6)
    s = init_search(m, MaxRank(m), SRC, 4)
    for _ in range(10):
        ats_iteration(s)
    check_invariants(s)
    s.tree.n[0] += 1
    with pytest.raises(AssertionError):
        check_invariants(s)


def test_identical_runs_identical_traces():
    m = seeded_model(V4, 2, 77)
    runs = [bats_decode(m, MaxRank(m), SRC, SearchBudget(6, 4), 4) for _ in range(2)]
    assert [r.tsv() for r in runs[0].trace] == [r.tsv() for r in runs[1].trace]
    assert runs[0].best == runs[1].best


@pytest.mark.parametrize("bad", [dict(iterations_per_step=0, max_depth=3), dict(iterations_per_step=1, max_depth=0),
                                 dict(iterations_per_step=1, max_depth=3, exploration_c=-1.0),
                                 dict(iterations_per_step=1, max_depth=3, max_iterations=-2)])
def test_budget_validation(bad):
    with pytest.raises(ValueError):
        SearchBudget(**bad)
