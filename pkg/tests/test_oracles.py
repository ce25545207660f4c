import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridnet.graphs import WeightedGraph, gen_graph
from hybridnet.oracles import (
    all_pairs_dijkstra,
    bellman_ford_k_sources,
    dijkstra,
    h_limited_distances,
    hop_limited_matrix,
    shortest_path_diameter,
)


def triangle():
    return WeightedGraph(3, [(1, 2, 1), (2, 3, 1), (1, 3, 3)])


def test_dijkstra_path():
    g = gen_graph("path", 3, seed=0)
    assert dijkstra(g, 1).dist == {1: 0.0, 2: 1.0, 3: 2.0}


def test_dijkstra_single_node():
    g = WeightedGraph(1, [])
    assert dijkstra(g, 1).dist == {1: 0.0}


def test_dijkstra_triangle_prefers_two_hops():
    assert dijkstra(triangle(), 1).dist == {1: 0.0, 2: 1.0, 3: 2.0}


def test_h_limited_path():
    g = gen_graph("path", 3, seed=0)
    assert h_limited_distances(g, 1, 1).dist == {1: 0.0, 2: 1.0}
    assert h_limited_distances(g, 1, 2).dist == {1: 0.0, 2: 1.0, 3: 2.0}


def test_h_limited_triangle_band():
    g = triangle()
    assert h_limited_distances(g, 1, 1).dist[3] == 3.0
    assert h_limited_distances(g, 1, 2).dist[3] == 2.0


def test_bellman_ford_single_source_reduction():
    g = gen_graph("random_connected", 10, seed=2, weight_mode="uniform", W=5)
    bf = bellman_ford_k_sources(g, {1}, 3)
    solo = h_limited_distances(g, 1, 3).dist
    assert {v: d[1] for v, d in bf.items() if 1 in d} == solo


def test_bellman_ford_two_sources_path():
    g = gen_graph("path", 4, seed=0)
    bf = bellman_ford_k_sources(g, {1, 4}, 1)
    assert bf[2].get(1) == 1.0
    assert 4 not in bf[2]


def test_bellman_ford_matches_per_source_oracle():
    g = gen_graph("random_connected", 12, seed=4, weight_mode="uniform", W=6)
    sources = {2, 5, 11}
    bf = bellman_ford_k_sources(g, sources, 4)
    for s in sources:
        solo = h_limited_distances(g, s, 4).dist
        got = {v: bf[v][s] for v in bf if s in bf[v]}
        assert got == solo


def test_spd_path():
    g = gen_graph("path", 9, seed=0)
    assert shortest_path_diameter(g) == 8


def test_spd_complete_graph():
    n = 6
    g = WeightedGraph(n, [(u, v, 1) for u in range(1, n) for v in range(u + 1, n + 1)])
    assert shortest_path_diameter(g) == 1


def test_spd_triangle_with_heavy_chord():
    assert shortest_path_diameter(triangle()) == 2


@given(seed=st.integers(min_value=0, max_value=25), n=st.integers(min_value=3, max_value=24))
@settings(max_examples=25, deadline=None)
def test_h_limited_monotone_and_converges_to_dijkstra(seed, n):
    g = gen_graph("random_connected", n, seed, weight_mode="uniform", W=5)
    spd = shortest_path_diameter(g)
    full = dijkstra(g, 1).dist
    prev = None
    for h in range(1, spd + 2):
        cur = h_limited_distances(g, 1, h).dist
        if prev is not None:
            assert set(prev) <= set(cur)
            assert all(cur[v] <= prev[v] for v in prev)
        prev = cur
    assert prev == full


def test_all_pairs_matrix_consistency():
    g = gen_graph("random_connected", 16, seed=6, weight_mode="uniform", W=7)
    mat = all_pairs_dijkstra(g)
    assert np.array_equal(mat.data, mat.data.T)
    assert np.all(np.diag(mat.data) == 0)
    row = dijkstra(g, 3).dist
    assert {v: mat.get(3, v) for v in row} == row


def test_hop_limited_matrix_unit_counts_hops():
    g = gen_graph("path", 5, seed=0, weight_mode="uniform", W=9)
    hops = hop_limited_matrix(g, [1], 10, unit=True)
    assert list(hops[0]) == [0.0, 1.0, 2.0, 3.0, 4.0]
