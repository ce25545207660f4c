"""Sequential shortest-path computations used as ground truth.

These run directly on the graph with no round simulation.  Distributed
algorithms elsewhere in the package are always checked against them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .graphs import INF, WeightedGraph


@dataclass
class DistanceMap:
    """Distances from one source; hop_limit None means unbounded."""

    source: int
    dist: dict[int, float]
    hop_limit: int | None = None

    def get(self, v: int) -> float:
        return self.dist.get(v, INF)


@dataclass
class DistanceMatrix:
    """All-pairs distances, nodes 1..n mapped to rows/cols 0..n-1."""

    n: int
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def get(self, u: int, v: int) -> float:
        return float(self.data[u - 1, v - 1])


def _rows_to_map(source: int, row: np.ndarray, hop_limit: int | None) -> DistanceMap:
    dist = {v + 1: float(row[v]) for v in range(row.shape[0]) if row[v] != np.inf}
    return DistanceMap(source=source, dist=dist, hop_limit=hop_limit)


def dijkstra(g: WeightedGraph, s: int) -> DistanceMap:
    indptr, nbrs, wgts = g.csr()
    row = K.dijkstra_dist(indptr, nbrs, wgts, s - 1)
    return _rows_to_map(s, row, None)


def h_limited_distances(g: WeightedGraph, s: int, h: int) -> DistanceMap:
    """Minimum weight over paths of at most h edges; unreachable pairs absent."""
    if h < 0:
        raise ValueError("hop limit must be >= 0")
    indptr, nbrs, wgts = g.csr()
    rows, _ = K.hop_limited_multisource(
        indptr, nbrs, wgts, np.array([s - 1], dtype=np.intp), h
    )
    return _rows_to_map(s, rows[0], h)


def hop_limited_matrix(
    g: WeightedGraph, sources: list[int], h: int, unit: bool = False
) -> np.ndarray:
    """(k, n) float64 of h-limited distances from each source, +inf where no
    path with <= h edges exists.  With unit=True all weights count as 1, so
    finite entries are hop counts."""
    indptr, nbrs, wgts = g.csr()
    if unit:
        wgts = np.ones_like(wgts)
    src = np.array([s - 1 for s in sources], dtype=np.intp)
    rows, _ = K.hop_limited_multisource(indptr, nbrs, wgts, src, h)
    return rows


def bellman_ford_k_sources(
    g: WeightedGraph, sources: list[int], h: int
) -> dict[int, dict[int, float]]:
    """h-limited distances toward each source, per node.

    Result[v][s] is the minimum weight of an s-v path with at most h edges;
    missing keys mean no such path.  A synchronous label-exchange realisation
    costs h rounds at 2*len(sources) messages per edge per round.
    """
    rows = hop_limited_matrix(g, sources, h)
    out: dict[int, dict[int, float]] = {v: {} for v in g.nodes()}
    for j, s in enumerate(sources):
        row = rows[j]
        finite = np.nonzero(row != np.inf)[0]
        for v in finite:
            out[v + 1][s] = float(row[v])
    return out


def shortest_path_diameter(g: WeightedGraph) -> int:
    """Smallest h such that every pair has a shortest path with <= h edges."""
    if g.n == 1:
        return 0
    indptr, nbrs, wgts = g.csr()
    src = np.arange(g.n, dtype=np.intp)
    _, last_change = K.hop_limited_multisource(indptr, nbrs, wgts, src, g.n)
    return last_change


def all_pairs_dijkstra(g: WeightedGraph) -> DistanceMatrix:
    indptr, nbrs, wgts = g.csr()
    data = np.empty((g.n, g.n))
    for s in range(g.n):
        data[s] = K.dijkstra_dist(indptr, nbrs, wgts, s)
    return DistanceMatrix(n=g.n, data=data, meta={"method": "dijkstra"})
