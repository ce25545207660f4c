"""Backend equivalence: the compiled kernels must match the pure fallbacks
bit for bit on the same inputs."""

import heapq
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridnet._kernels import BACKEND, pure
from hybridnet.graphs import gen_graph

compiled = pytest.importorskip(
    "hybridnet._kernels._speedups", reason="compiled backend not built"
)


def ref_dijkstra(g, src0):
    n = g.n
    dist = [math.inf] * n
    dist[src0] = 0.0
    heap = [(0.0, src0)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in g._adj[u + 1].items():
            nd = d + w
            if nd < dist[v - 1]:
                dist[v - 1] = nd
                heapq.heappush(heap, (nd, v - 1))
    return np.array(dist)


def _graph(n, seed, W=6):
    return gen_graph("random_connected", n, seed, weight_mode="uniform", W=W)


def test_backend_is_compiled_in_this_checkout():
    assert BACKEND == "compiled"


@given(seed=st.integers(min_value=0, max_value=40), n=st.integers(min_value=2, max_value=40))
@settings(max_examples=40, deadline=None)
def test_dijkstra_backends_agree(seed, n):
    g = _graph(n, seed)
    indptr, nbrs, wgts = g.csr()
    src = seed % n
    a = pure.dijkstra_dist(indptr, nbrs, wgts, src)
    b = compiled.dijkstra_dist(indptr, nbrs, wgts, src)
    assert np.array_equal(a, b)
    assert np.array_equal(a, ref_dijkstra(g, src))


@given(
    seed=st.integers(min_value=0, max_value=30),
    n=st.integers(min_value=3, max_value=36),
    hops=st.integers(min_value=1, max_value=12),
)
@settings(max_examples=40, deadline=None)
def test_hop_limited_backends_agree(seed, n, hops):
    g = _graph(n, seed)
    indptr, nbrs, wgts = g.csr()
    sources = np.array(sorted({seed % n, (seed * 7 + 1) % n}), dtype=np.int64)
    a_dist, a_last = pure.hop_limited_multisource(indptr, nbrs, wgts, sources, hops)
    b_dist, b_last = compiled.hop_limited_multisource(indptr, nbrs, wgts, sources, hops)
    assert np.array_equal(a_dist, b_dist)
    assert a_last == b_last


def test_hop_limited_semantics_on_path():
    g = gen_graph("path", 6, seed=0)
    indptr, nbrs, wgts = g.csr()
    dist, _ = pure.hop_limited_multisource(
        indptr, nbrs, wgts, np.array([0], dtype=np.int64), 2
    )
    assert list(dist[0]) == [0.0, 1.0, 2.0, math.inf, math.inf, math.inf]


def test_hop_limited_monotone_in_hops():
    g = _graph(24, seed=4)
    indptr, nbrs, wgts = g.csr()
    srcs = np.array([0, 5], dtype=np.int64)
    prev = None
    for h in range(1, 8):
        cur = pure.hop_limited_multisource(indptr, nbrs, wgts, srcs, h)[0]
        if prev is not None:
            assert np.all(cur <= prev)
        prev = cur


@given(
    rows=st.integers(min_value=1, max_value=20),
    words=st.integers(min_value=1, max_value=4),
    seed=st.integers(min_value=0, max_value=100),
)
@settings(max_examples=40, deadline=None)
def test_popcount_backends_agree(rows, words, seed):
    rng = np.random.default_rng(seed)
    masks = rng.integers(0, 2**63, size=(rows, words), dtype=np.uint64)
    a = pure.popcount_rows(masks)
    b = compiled.popcount_rows(masks)
    assert np.array_equal(a, b)
    direct = [sum(bin(int(w)).count("1") for w in row) for row in masks]
    assert list(a) == direct


@given(seed=st.integers(min_value=0, max_value=40), n=st.integers(min_value=2, max_value=32))
@settings(max_examples=30, deadline=None)
def test_flood_round_backends_agree(seed, n):
    g = _graph(n, seed)
    indptr, nbrs, _ = g.csr()
    eu, ev, _ = g.edge_arrays()
    words = (n + 63) // 64
    rng = np.random.default_rng(seed)
    known = rng.integers(0, 2**63, size=(n, words), dtype=np.uint64)
    newly = rng.integers(0, 2**63, size=(n, words), dtype=np.uint64)
    a_in, a_load, a_tot = pure.flood_round(indptr, nbrs, eu, ev, known, newly)
    b_in, b_load, b_tot = compiled.flood_round(indptr, nbrs, eu, ev, known, newly)
    assert np.array_equal(a_in, b_in)
    assert (a_load, a_tot) == (b_load, b_tot)


def test_flood_round_union_and_load_accounting():
    g = gen_graph("path", 3, seed=0)
    indptr, nbrs, _ = g.csr()
    eu, ev, _ = g.edge_arrays()
    known = np.zeros((3, 1), dtype=np.uint64)
    newly = np.zeros((3, 1), dtype=np.uint64)
    newly[0, 0] = 0b11  # node 1 announces tokens 0 and 1
    newly[2, 0] = 0b100  # node 3 announces token 2
    incoming, max_load, total = pure.flood_round(indptr, nbrs, eu, ev, known, newly)
    assert incoming[1, 0] == 0b111  # middle node hears both sides
    assert incoming[0, 0] == 0 and incoming[2, 0] == 0
    assert max_load == 2  # edge (1,2): two tokens one way, none back
    assert total == 3
