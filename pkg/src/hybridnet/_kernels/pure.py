"""Array kernels, pure numpy reference implementations.

The compiled module ``_speedups`` mirrors these signatures exactly;
``_kernels.__init__`` selects whichever backend is available.  All
functions take a CSR adjacency (indptr, nbrs, wgts) over 0-based nodes
of a connected undirected graph, so every node has degree >= 1.
"""

from __future__ import annotations

import heapq

import numpy as np

# cap on the size of the (chunk, 2m) scratch array used per relaxation round
_CHUNK_BUDGET = 1 << 23


def dijkstra_dist(indptr, nbrs, wgts, src):
    """Single-source shortest-path distances, float64[n] with +inf for unreachable."""
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    dist[src] = 0.0
    heap = [(0.0, int(src))]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for i in range(indptr[u], indptr[u + 1]):
            v = int(nbrs[i])
            nd = d + wgts[i]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def hop_limited_multisource(indptr, nbrs, wgts, sources, hops):
    """Synchronous relaxation from k sources for at most ``hops`` rounds.

    Returns (dist, last_change) where dist[j, v] is the minimum weight of a
    path from sources[j] to v using at most ``hops`` edges (+inf if none),
    and last_change is the last round index at which any label improved.
    Labels are stable for every h >= last_change, so early exit is exact.
    """
    n = indptr.shape[0] - 1
    k = len(sources)
    dist = np.full((k, n), np.inf)
    dist[np.arange(k), sources] = 0.0
    if hops <= 0 or k == 0:
        return dist, 0
    last_change = 0
    chunk = max(1, _CHUNK_BUDGET // max(1, nbrs.shape[0]))
    starts = indptr[:-1]
    for r in range(1, hops + 1):
        changed = False
        for lo in range(0, k, chunk):
            hi = min(k, lo + chunk)
            cand = dist[lo:hi, nbrs] + wgts
            relaxed = np.minimum.reduceat(cand, starts, axis=1)
            if np.any(relaxed < dist[lo:hi]):
                np.minimum(dist[lo:hi], relaxed, out=dist[lo:hi])
                changed = True
        if not changed:
            break
        last_change = r
    return dist, last_change


def popcount_rows(masks):
    """Number of set bits per row of a (n, words) uint64 bitset array."""
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(masks).sum(axis=1, dtype=np.int64)
    bytes_view = masks.view(np.uint8)
    return np.unpackbits(bytes_view, axis=1).sum(axis=1, dtype=np.int64)


def flood_round(indptr, nbrs, eu, ev, known, newly):
    """One synchronous flooding round over row bitsets.

    Every node sends its ``newly`` set to all neighbours.  Returns
    (incoming, max_edge_load, total_msgs) where incoming[v] is the union of
    the neighbours' newly rows, and the load of edge {u, v} is
    |newly[u]| + |newly[v]| (one message per token per direction).
    """
    n = indptr.shape[0] - 1
    incoming = np.zeros_like(known)
    pc = popcount_rows(newly)
    active = np.nonzero(pc)[0]
    for u in active:
        neigh = nbrs[indptr[u]:indptr[u + 1]]
        incoming[neigh] |= newly[u]
    if eu.shape[0]:
        loads = pc[eu] + pc[ev]
        max_edge_load = int(loads.max())
        total_msgs = int(loads.sum())
    else:
        max_edge_load = 0
        total_msgs = 0
    return incoming, max_edge_load, total_msgs
