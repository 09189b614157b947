import math

import numpy as np
from hypothesis import given, settings, strategies as st

from donorgraph.graphs import Graph
from donorgraph.rg import removal_report, run_rg


def replay_ok(plan, nse, g):
    """Every pick had the highest NSE among the gauges still available."""
    available = [bool(g.adjacency()[i].any()) for i in range(g.p)]
    key = [(-math.inf if not math.isfinite(v) else v) for v in nse]
    for _, gid, v in plan.ranked:
        i = gid
        if not available[i]:
            return False
        if any(available[j] and key[j] > key[i] for j in range(g.p)):
            return False
        available[i] = False
        for nb in g.neighbors(i):
            available[nb] = False
    return not any(available)


def test_path():
    g = Graph(3, frozenset({(0, 1), (1, 2)}))
    plan = run_rg([0.8, 0.9, 0.85], g, ["a", "b", "c"])
    assert plan.ranked == [(1, "b", 0.9)]
    assert plan.not_removable == ["a", "c"]


def test_empty_graph():
    plan = run_rg([0.9, 0.8], Graph.empty(2), ["a", "b"])
    assert plan.ranked == [] and plan.not_removable == ["a", "b"] and plan.isolated == ["a", "b"]
    assert removal_report(plan) == 0.0


def test_disjoint_edges():
    g = Graph(4, frozenset({(0, 1), (2, 3)}))
    plan = run_rg([0.7, 0.6, 0.9, 0.5], g, list("abcd"))
    assert plan.ranked == [(1, "c", 0.9), (2, "a", 0.7)]
    assert plan.not_removable == ["b", "d"]


def test_star():
    g = Graph(4, frozenset({(0, 1), (0, 2), (0, 3)}))
    leaf_wins = run_rg([0.5, 0.9, 0.8, 0.7], g)
    # a picked leaf blocks only the hub, so the remaining leaves stay available
    assert leaf_wins.removed == [1, 2, 3]
    hub_wins = run_rg([0.95, 0.9, 0.8, 0.7], g)
    assert hub_wins.removed == [0]


def test_ties_and_nan():
    g = Graph(4, frozenset({(0, 1), (2, 3)}))
    assert run_rg([0.5, 0.5, 0.5, 0.5], g).removed == [0, 2]
    assert run_rg([math.nan, 0.1, math.nan, math.nan], g).removed == [1, 2]


def test_report_and_dict():
    g = Graph(6, frozenset({(0, 1), (2, 3), (4, 5)}))
    plan = run_rg([0.92, 0.1, 0.81, 0.1, 0.65, 0.1], g)
    assert removal_report(plan, 0.7) == 1.73
    d = plan.to_dict()
    assert [r["rank"] for r in d["ranked"]] == [1, 2, 3]


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_replay_and_independence(p, seed):
    rng = np.random.default_rng(seed)
    edges = frozenset((i, j) for i in range(p) for j in range(i + 1, p) if rng.random() < 0.3)
    g = Graph(p, edges)
    nse = list(np.round(rng.uniform(-1, 1, p), 1))
    plan = run_rg(nse, g)
    assert replay_ok(plan, nse, g)
    picked = set(plan.removed)
    assert not any(i in picked and j in picked for i, j in g.edges)
    assert sorted(picked | set(plan.not_removable)) == list(range(p))
    assert all(g.neighbors(i) for i in picked)
