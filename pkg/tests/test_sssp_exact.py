import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridnet.graphs import WeightedGraph, gen_graph
from hybridnet.oracles import (
    dijkstra,
    hop_limited_matrix,
    shortest_path_diameter,
)
from hybridnet.sim import HybridConfig
from hybridnet.sssp_exact import (
    BallTree,
    exact_sssp,
    hk_ssp,
    pruned_subtree_sizes,
    splitting_node,
    triangular,
)

INF = math.inf


def test_triangular_values():
    assert triangular(0) == 0
    assert triangular(1) == 1
    assert triangular(3) == 6


# -- local ball trees -----------------------------------------------------------


def test_ball_tree_radius_zero():
    g = gen_graph("path", 4, seed=0)
    t = BallTree(g, 2, 0)
    assert t.dist == {2: 0.0}
    assert t.children.get(2, []) == []


def test_ball_tree_star_children():
    g = gen_graph("star", 5, seed=0)
    t = BallTree(g, 1, 1)
    assert sorted(t.children[1]) == [2, 3, 4, 5]
    assert all(t.parent[v] == 1 for v in (2, 3, 4, 5))


def test_ball_tree_triangle_parent():
    g = WeightedGraph(3, [(1, 2, 1), (2, 3, 1), (1, 3, 3)])
    t = BallTree(g, 1, 2)
    assert t.parent[3] == 2
    assert t.dist[3] == 2.0


def test_ball_tree_tie_breaks_to_min_id():
    g = WeightedGraph(4, [(1, 2, 1), (1, 3, 1), (2, 4, 1), (3, 4, 1)])
    t = BallTree(g, 1, 2)
    assert t.parent[4] == 2


# -- splitting node --------------------------------------------------------------


def _components_after_removal(children, top, skip, x):
    """Sizes of the connected pieces of the pruned subtree once x leaves."""
    sizes = pruned_subtree_sizes(children, top, skip)
    total = sizes[top]
    pieces = [sizes[c] for c in children.get(x, ()) if c not in skip]
    if x != top:
        pieces.append(total - sizes[x])
    return pieces, total


def _check_split(children, top, skip=frozenset()):
    sizes = pruned_subtree_sizes(children, top, skip)
    x = splitting_node(children, sizes, top, skip)
    pieces, total = _components_after_removal(children, top, skip, x)
    assert all(2 * p <= total for p in pieces), (children, x, pieces)
    return x


def test_split_path_of_three():
    children = {1: [2], 2: [3]}
    assert _check_split(children, 1) == 2


def test_split_star_center():
    children = {1: [2, 3, 4, 5]}
    assert _check_split(children, 1) == 1


def test_split_two_nodes_picks_root():
    children = {1: [2]}
    assert _check_split(children, 1) == 1


def test_split_respects_skip():
    children = {1: [2, 3], 3: [4, 5], 5: [6, 7]}
    x = _check_split(children, 1, skip=frozenset({2}))
    assert x in {3, 5}


@given(st.integers(min_value=2, max_value=40), st.integers(min_value=0, max_value=999))
@settings(max_examples=80, deadline=None)
def test_split_random_labeled_trees(n, seed):
    rng = random.Random(seed)
    children = {}
    for v in range(2, n + 1):
        children.setdefault(rng.randint(1, v - 1), []).append(v)
    _check_split(children, 1)


# -- exact single-source distances ----------------------------------------------


def test_sssp_star_terminates_fast():
    g = gen_graph("star", 16, seed=0, weight_mode="uniform", W=8)
    res = exact_sssp(g, 5, HybridConfig(seed=0))
    assert {v: d for v, d in res.dist.items() if d != INF} == dijkstra(g, 5).dist
    assert res.phases <= 3  # hop diameter 2, so SPD small


def test_sssp_unit_path_phase_count():
    g = gen_graph("path", 16, seed=0)
    res = exact_sssp(g, 1, HybridConfig(seed=0))
    assert {v: d for v, d in res.dist.items() if d != INF} == dijkstra(g, 1).dist
    assert res.phases <= math.ceil(2 * math.sqrt(15)) + 1


def test_sssp_random_graphs_match_dijkstra():
    for seed in range(4):
        g = gen_graph("random_connected", 64, seed, weight_mode="uniform", W=8)
        src = seed % 64 + 1
        res = exact_sssp(g, src, HybridConfig(seed=seed))
        got = {v: d for v, d in res.dist.items() if d != INF}
        assert got == dijkstra(g, src).dist


def test_sssp_phase_budget_and_bound():
    g = gen_graph("random_connected", 48, seed=2, weight_mode="uniform", W=8)
    res = exact_sssp(g, 1, HybridConfig(seed=2))
    spd = shortest_path_diameter(g)
    assert res.phases <= math.ceil(2 * math.sqrt(spd)) + 1
    n = 48
    budget = 2.5 * math.log2(n) ** 2
    assert max(res.metrics["per_phase_rounds"]) <= budget


def test_sssp_label_reach_covers_spd():
    g = gen_graph("path", 12, seed=0)
    res = exact_sssp(g, 1, HybridConfig(seed=0))
    assert res.metrics["label_reach"] >= shortest_path_diameter(g)


def test_sssp_deterministic():
    def run():
        g = gen_graph("random_connected", 40, seed=8, weight_mode="uniform", W=8)
        res = exact_sssp(g, 3, HybridConfig(seed=8))
        return res.dist, res.net.ledger.to_csv()

    assert run() == run()


def test_sssp_rejects_bad_source():
    g = gen_graph("path", 4, seed=0)
    with pytest.raises(Exception):
        exact_sssp(g, 9)


# -- bounded-hop multi-source variant --------------------------------------------


def test_hk_single_source_sandwich():
    g = gen_graph("random_connected", 24, seed=1, weight_mode="uniform", W=6)
    h = 4
    res = hk_ssp(g, [7], h, HybridConfig(seed=1))
    assert res.reach * res.phases >= h
    capped = hop_limited_matrix(g, [7], h)
    truth = dijkstra(g, 7).dist
    for v in range(1, 25):
        got = res.dist[v][7]
        if got != INF:
            assert got >= truth[v] - 1e-9
        if capped[0][v - 1] != INF:
            assert got <= float(capped[0][v - 1]) + 1e-9


def test_hk_h1_star_from_center():
    g = gen_graph("star", 8, seed=0, weight_mode="uniform", W=5)
    res = hk_ssp(g, [1], 1, HybridConfig(seed=0))
    # every leaf sits one hop away, so both sandwich sides coincide
    for v in range(2, 9):
        assert res.dist[v][1] == float(g._adj[1][v])


def test_hk_full_budget_matches_dijkstra():
    g = gen_graph("random_connected", 24, seed=3, weight_mode="uniform", W=8)
    res = hk_ssp(g, [2, 11], 23, HybridConfig(seed=3))
    for s in (2, 11):
        truth = dijkstra(g, s).dist
        assert {v: res.dist[v][s] for v in g.nodes()} == truth


def test_hk_multi_source_sandwich():
    g = gen_graph("random_connected", 64, seed=5, weight_mode="uniform", W=8)
    sources = [3, 17, 40, 60]
    h = 9
    k = len(sources)
    res = hk_ssp(g, sources, h, HybridConfig(seed=5))
    assert res.reach == math.ceil(math.sqrt(k * h))
    assert res.phases == math.ceil(h / res.reach)
    at_h = hop_limited_matrix(g, sources, h)
    truth = {s: dijkstra(g, s).dist for s in sources}
    for i, s in enumerate(sources):
        for v in range(1, 65):
            got = res.dist[v][s]
            if got != INF:
                assert got >= truth[s][v] - 1e-9
            if at_h[i][v - 1] != INF:
                assert got <= float(at_h[i][v - 1]) + 1e-9
