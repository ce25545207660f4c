import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridnet.graphs import (
    GraphError,
    WeightedGraph,
    bernoulli_indices,
    derived_rng,
    gen_graph,
    read_graph,
    write_graph,
)


def test_path_family_shape():
    g = gen_graph("path", 4, seed=0)
    assert g.n == 4
    assert sorted(g.edges()) == [(1, 2, 1), (2, 3, 1), (3, 4, 1)]


def test_cycle_closes():
    g = gen_graph("cycle", 5, seed=0)
    assert g.m == 5
    assert g.has_edge(1, 5)


def test_star_center():
    g = gen_graph("star", 6, seed=0)
    assert g.degree(1) == 5
    assert all(g.degree(v) == 1 for v in range(2, 7))


def test_grid_dims_recorded():
    g = gen_graph("grid", 16, seed=0)
    assert g.meta["rows"] * g.meta["cols"] >= 16
    assert g.degree(1) == 2


def test_random_connected_is_connected_and_weighted():
    g = gen_graph("random_connected", 32, seed=1, weight_mode="uniform", W=8)
    assert g.n == 32
    assert g.m >= 31
    ws = [w for _, _, w in g.edges()]
    assert min(ws) >= 1 and max(ws) <= 8


def test_gadget_side_sets_balanced():
    g = gen_graph("lb_apsp_gadget", 64, seed=7)
    y = (64 - (64 // 2 + g.meta["hop_gap"])) // 2
    assert len(g.meta["side_near"]) == y
    assert len(g.meta["side_far"]) == y


def test_gen_graph_deterministic():
    a = gen_graph("random_connected", 24, seed=9, weight_mode="uniform", W=5)
    b = gen_graph("random_connected", 24, seed=9, weight_mode="uniform", W=5)
    assert sorted(a.edges()) == sorted(b.edges())
    c = gen_graph("random_connected", 24, seed=10, weight_mode="uniform", W=5)
    assert sorted(a.edges()) != sorted(c.edges())


def test_constructor_rejections():
    with pytest.raises(GraphError):
        WeightedGraph(3, [(1, 1, 1), (1, 2, 1), (2, 3, 1)])
    with pytest.raises(GraphError):
        WeightedGraph(3, [(1, 2, 1), (2, 1, 2), (2, 3, 1)])
    with pytest.raises(GraphError):
        WeightedGraph(3, [(1, 2, 0), (2, 3, 1)])
    with pytest.raises(GraphError):
        WeightedGraph(3, [(1, 2, 1), (2, 4, 1)])
    with pytest.raises(GraphError):
        WeightedGraph(4, [(1, 2, 1), (3, 4, 1)])


def test_weight_above_declared_cap_rejected():
    with pytest.raises(GraphError):
        WeightedGraph(2, [(1, 2, 9)], W=8)


def test_file_roundtrip(tmp_path):
    g = gen_graph("random_connected", 20, seed=3, weight_mode="uniform", W=7)
    path = tmp_path / "g.txt"
    write_graph(g, str(path))
    first = path.read_text().splitlines()[0].split()
    assert first == [str(g.n), str(g.m), str(g.W)]
    h = read_graph(str(path))
    assert h.n == g.n and h.W == g.W
    assert sorted(h.edges()) == sorted(g.edges())


def test_induced_keeps_labels():
    g = gen_graph("path", 6, seed=0)
    sub = g.induced({2, 3, 4})
    assert sorted(sub.edges()) == [(2, 3, 1), (3, 4, 1)]
    assert sub.n == g.n


def test_derived_rng_streams():
    assert derived_rng(1, "a", 2).random() == derived_rng(1, "a", 2).random()
    assert derived_rng(1, "a", 2).random() != derived_rng(1, "a", 3).random()


def test_bernoulli_indices_edges():
    rng = derived_rng("bern", 0)
    assert bernoulli_indices(rng, 10, 0.0) == []
    assert bernoulli_indices(rng, 10, 1.0) == list(range(10))
    assert bernoulli_indices(rng, 0, 0.5) == []


@given(
    n=st.integers(min_value=1, max_value=200),
    p=st.floats(min_value=0.0, max_value=1.0),
    salt=st.integers(min_value=0, max_value=5),
)
@settings(max_examples=60, deadline=None)
def test_bernoulli_indices_sorted_subset(n, p, salt):
    out = bernoulli_indices(derived_rng("bern", salt), n, p)
    assert out == sorted(set(out))
    assert all(0 <= i < n for i in out)


def test_bernoulli_indices_rate():
    hits = 0
    trials = 400
    for s in range(trials):
        hits += len(bernoulli_indices(derived_rng("rate", s), 100, 0.3))
    mean = hits / trials
    assert 25 < mean < 35


def test_csr_matches_adjacency():
    g = gen_graph("random_connected", 12, seed=5, weight_mode="uniform", W=4)
    indptr, nbrs, wgts = g.csr()
    for u in g.nodes():
        lo, hi = indptr[u - 1], indptr[u]
        seen = {int(nbrs[i]) + 1: float(wgts[i]) for i in range(lo, hi)}
        assert seen == {v: float(w) for v, w in g._adj[u].items()}
