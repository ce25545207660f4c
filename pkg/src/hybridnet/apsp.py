"""All-pairs shortest paths through a sampled skeleton overlay.

Every node explores a bounded number of hops with synchronous label
exchanges, a random node sample forms a skeleton graph whose edges carry
hop-limited distances, the skeleton is shared globally via token
dissemination, and distances are combined locally.  The exact variant
shares hop-limited distances from every node to every skeleton node; the
approximate variants explore further but share only each node's closest
skeleton member, trading accuracy for traffic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import INF, WeightedGraph
from .oracles import DistanceMatrix, hop_limited_matrix
from .sim import HybridConfig, HybridNetwork
from .tokens import Token, token_dissemination


@dataclass
class Skeleton:
    x: float
    xi: float
    h: int
    explore_rounds: int
    marked: list[int]
    dist_h: np.ndarray | None  # (n, n) h-limited, exact variant
    dist_hm: np.ndarray  # (|M|, n) h-limited from marked nodes
    dist_m: np.ndarray | None  # (n, n) explore-limited, approx variants
    edges: list[tuple[int, int, float]]
    resamples: int = 0
    ds: np.ndarray | None = None  # (|M|, |M|) exact skeleton distances
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.marked)


def _mark_nodes(net: HybridNetwork, x: float, special: tuple[int, ...]) -> tuple[list[int], int]:
    n = net.g.n
    resamples = 0
    while True:
        marked = set(special)
        for v in range(1, n + 1):
            if net.stream_rng("mark", resamples, v).random() < 1.0 / x:
                marked.add(v)
        if marked:
            return sorted(marked), resamples
        # empty sample: redraw with a fresh stream and record the event
        resamples += 1


def construct_skeleton(
    net: HybridNetwork,
    x: float,
    xi: float = 8.0,
    special: tuple[int, ...] = (),
    explore: str = "h",
    keep_all_rows: bool = True,
    topology_mode: str = "labels",
    c_topo: float = 2.0,
    h_override: int | None = None,
) -> Skeleton:
    """Sample nodes with probability 1/x and explore bounded-hop distances.

    h = ceil(xi * x * ln n), capped at n - 1 because longer paths repeat
    nodes.  explore="h" runs h rounds; explore="balanced" runs
    max(h, ceil(n / h)) rounds and also records the longer-range distances.
    Skeleton edges join marked pairs within h hops, weighted by the
    h-limited distance.  Per-round local load is 2 labels per explored
    source per edge, or the amortized topology load in "full" mode.
    """
    g = net.g
    n = g.n
    if x < 1:
        raise ValueError("sampling parameter x must be >= 1")
    marked, resamples = _mark_nodes(net, x, special)
    if h_override is not None:
        h = min(max(1, h_override), n - 1)
    else:
        h = min(math.ceil(xi * x * math.log(max(2, n))), n - 1)
        h = max(h, 1)
    if explore == "h":
        rounds = h
    elif explore == "balanced":
        rounds = min(max(h, math.ceil(n / h)), n - 1)
    else:
        raise ValueError(f"unknown explore mode {explore!r}")

    all_nodes = list(g.nodes())
    dist_h = hop_limited_matrix(g, all_nodes, h) if keep_all_rows else None
    dist_m = None
    if explore == "balanced":
        dist_m = (
            hop_limited_matrix(g, all_nodes, rounds) if rounds > h else
            (dist_h if dist_h is not None else hop_limited_matrix(g, all_nodes, h))
        )
    midx = [v - 1 for v in marked]
    dist_hm = dist_h[midx] if dist_h is not None else hop_limited_matrix(g, marked, h)
    hops_marked = hop_limited_matrix(g, marked, h, unit=True)

    edges = []
    for i, u in enumerate(marked):
        for j in range(i + 1, len(marked)):
            v = marked[j]
            if hops_marked[i, v - 1] <= h:
                w = dist_hm[i, v - 1]
                assert w != INF
                edges.append((u, v, float(w)))

    if topology_mode == "labels":
        per_edge = 2 * n if keep_all_rows else 2 * len(marked)
    elif topology_mode == "full":
        per_edge = max(2, math.ceil(c_topo * g.m / rounds))
    else:
        raise ValueError(f"unknown topology_mode {topology_mode!r}")
    net.charge_rounds(rounds, max_local=per_edge)

    return Skeleton(
        x=x,
        xi=xi,
        h=h,
        explore_rounds=rounds,
        marked=marked,
        dist_h=dist_h,
        dist_hm=dist_hm,
        dist_m=dist_m,
        edges=edges,
        resamples=resamples,
    )


def _skeleton_apsp(skel: Skeleton) -> np.ndarray:
    """Exact all-pairs distances inside the skeleton graph (Dijkstra)."""
    from . import _kernels as K

    M = skel.size
    pos = {v: i for i, v in enumerate(skel.marked)}
    indptr_l: list[list[tuple[int, float]]] = [[] for _ in range(M)]
    for u, v, w in skel.edges:
        indptr_l[pos[u]].append((pos[v], w))
        indptr_l[pos[v]].append((pos[u], w))
    indptr = np.zeros(M + 1, dtype=np.intp)
    for i in range(M):
        indptr_l[i].sort()
        indptr[i + 1] = indptr[i] + len(indptr_l[i])
    nbrs = np.array(
        [j for row in indptr_l for j, _ in row], dtype=np.intp
    )
    wgts = np.array(
        [w for row in indptr_l for _, w in row], dtype=np.float64
    )
    ds = np.empty((M, M))
    for i in range(M):
        ds[i] = K.dijkstra_dist(indptr, nbrs, wgts, i)
    return ds


def transmit_skeleton(net: HybridNetwork, skel: Skeleton, td_x: int | None = None) -> dict:
    """Make every skeleton edge known everywhere, then solve the skeleton.

    One token per skeleton edge, created at the lower-id endpoint.  After
    dissemination each node can run the same local computation, so the
    shared skeleton distance matrix is computed once here.
    """
    net.set_phase("apsp.skeleton")
    initial: dict[int, list[Token]] = {}
    for u, v, w in skel.edges:
        initial.setdefault(u, []).append(Token((u, v, int(w))))
    res = token_dissemination(net, initial, x=td_x)
    skel.ds = _skeleton_apsp(skel)
    return {
        "tokens": len(skel.edges),
        "rounds": res.metrics.get("rounds", 0),
        "complete": res.complete,
    }


def transmit_distances(net: HybridNetwork, skel: Skeleton, td_x: int | None = None) -> dict:
    """Share d_h(v, u) for every unmarked v and marked u, via one token per
    finite pair (pairs beyond the hop horizon carry no information)."""
    net.set_phase("apsp.distances")
    marked_set = set(skel.marked)
    initial: dict[int, list[Token]] = {}
    count = 0
    for i, u in enumerate(skel.marked):
        row = skel.dist_hm[i]
        for v in range(1, net.g.n + 1):
            if v in marked_set:
                continue
            w = row[v - 1]
            if w != INF:
                initial.setdefault(v, []).append(Token((u, v, int(w))))
                count += 1
    res = token_dissemination(net, initial, x=td_x)
    return {
        "tokens": count,
        "rounds": res.metrics.get("rounds", 0),
        "complete": res.complete,
    }


def transmit_closest(net: HybridNetwork, skel: Skeleton, td_x: int | None = None) -> dict:
    """Share, for every unmarked node, its closest skeleton member only."""
    net.set_phase("apsp.closest")
    n = net.g.n
    closest_idx = np.full(n, -1, dtype=np.intp)
    closest_d = np.full(n, INF)
    pos = {v: i for i, v in enumerate(skel.marked)}
    for v in range(1, n + 1):
        if v in pos:
            closest_idx[v - 1] = pos[v]
            closest_d[v - 1] = 0.0
    cols = skel.dist_hm  # (M, n)
    initial: dict[int, list[Token]] = {}
    count = 0
    for v in range(1, n + 1):
        if v in pos:
            continue
        col = cols[:, v - 1]
        j = int(np.argmin(col))  # ties: first index = smallest marked id
        if col[j] == INF:
            continue
        closest_idx[v - 1] = j
        closest_d[v - 1] = float(col[j])
        initial.setdefault(v, []).append(Token((v, skel.marked[j], int(col[j]))))
        count += 1
    res = token_dissemination(net, initial, x=td_x)
    skel.meta["closest_idx"] = closest_idx
    skel.meta["closest_d"] = closest_d
    return {
        "tokens": count,
        "rounds": res.metrics.get("rounds", 0),
        "complete": res.complete,
    }


def minplus(a: np.ndarray, b: np.ndarray, row_chunk: int = 64) -> np.ndarray:
    """(min, +) matrix product with +inf as the absorbing element."""
    n, p = a.shape
    q = b.shape[1]
    out = np.empty((n, q))
    for lo in range(0, n, row_chunk):
        hi = min(n, lo + row_chunk)
        out[lo:hi] = (a[lo:hi, :, None] + b[None, :, :]).min(axis=1)
    return out


@dataclass
class ApspResult:
    dmat: DistanceMatrix
    skeleton: Skeleton
    net: HybridNetwork
    metrics: dict = field(default_factory=dict)


def default_x_exact(n: int) -> float:
    return max(2.0, round(n ** (2.0 / 3.0)))


def default_x_approx3(n: int) -> float:
    return max(2.0, round(math.sqrt(n)))


def exact_apsp(
    g: WeightedGraph,
    cfg: HybridConfig | None = None,
    x: float | None = None,
    xi: float = 8.0,
    td_x: int | None = None,
) -> ApspResult:
    """Exact distances between all pairs, with high probability.

    Combines each node's own hop-limited view with paths that enter the
    skeleton at a marked node, traverse exact skeleton distances, and leave
    it at another marked node.  A marked node enters the skeleton only at
    itself; unmarked nodes may enter at any marked node they can see.
    """
    net = HybridNetwork(g, cfg)
    net.set_phase("apsp.explore")
    x = default_x_exact(g.n) if x is None else x
    skel = construct_skeleton(net, x, xi=xi, explore="h")
    m_sk = transmit_skeleton(net, skel, td_x=td_x)
    m_di = transmit_distances(net, skel, td_x=td_x)

    n = g.n
    midx = [v - 1 for v in skel.marked]
    # entry matrix: how each node may reach the skeleton
    entry = skel.dist_h[:, midx].copy()  # (n, M), symmetric source rows
    for j, v in enumerate(skel.marked):
        entry[v - 1, :] = INF
        entry[v - 1, j] = 0.0
    through = minplus(minplus(entry, skel.ds), entry.T)
    data = np.minimum(skel.dist_h, through)
    np.fill_diagonal(data, 0.0)
    assert np.array_equal(data, data.T)

    dmat = DistanceMatrix(n=n, data=data, meta={"mode": "exact", "x": x, "h": skel.h})
    metrics = {
        "mode": "exact",
        "x": x,
        "h": skel.h,
        "skeleton_size": skel.size,
        "skeleton_edges": len(skel.edges),
        "resamples": skel.resamples,
        "transmit_skeleton": m_sk,
        "transmit_distances": m_di,
        "rounds": net.round_no - 1,
        "infinite_pairs": int(np.isinf(data).sum()),
    }
    return ApspResult(dmat=dmat, skeleton=skel, net=net, metrics=metrics)


def approx_apsp(
    g: WeightedGraph,
    cfg: HybridConfig | None = None,
    mode: str = "approx3",
    eps: float | None = None,
    x: float | None = None,
    xi: float = 8.0,
    td_x: int | None = None,
) -> ApspResult:
    """Approximate distances: stretch 3 by default, or 1 + eps.

    Both variants explore max(h, n/h) hops so that every far pair is seen
    through the skeleton while close pairs are measured directly.  Each
    node shares only its closest marked node.  The stretch-(1+eps) variant
    shrinks the hop horizon so the detour through the skeleton costs at
    most an eps fraction of any path that is long enough to need it.
    """
    net = HybridNetwork(g, cfg)
    net.set_phase("apsp.explore")
    n = g.n
    h_override = None
    if mode == "approx3":
        x = default_x_approx3(n) if x is None else x
    elif mode == "eps":
        if eps is None or eps <= 0:
            raise ValueError("eps mode needs eps > 0")
        _, _, ew = g.edge_arrays()
        w_ratio = float(ew.max() / ew.min()) if len(ew) else 1.0
        # detour through the skeleton costs <= 2 * h * Wmax, affordable for
        # any path of >= n/h hops only if h*h <= n * eps / (2 * w_ratio)
        h_override = max(1, math.floor(math.sqrt(n * eps / (2.0 * w_ratio))))
        if x is None:
            x = max(1.0, h_override / (xi * math.log(max(2, n))))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    skel = construct_skeleton(
        net, x, xi=xi, explore="balanced", keep_all_rows=True, h_override=h_override
    )
    m_sk = transmit_skeleton(net, skel, td_x=td_x)
    m_cl = transmit_closest(net, skel, td_x=td_x)

    closest_idx = skel.meta["closest_idx"]
    closest_d = skel.meta["closest_d"]
    midx = [v - 1 for v in skel.marked]
    to_marked = skel.dist_h[:, midx]  # (n, M) via symmetry of source rows
    ds_to_closest = np.full((skel.size, n), INF)
    have = closest_idx >= 0
    ds_to_closest[:, have] = skel.ds[:, closest_idx[have]]
    through = minplus(to_marked, ds_to_closest) + closest_d[None, :]
    data = np.minimum(skel.dist_m, np.minimum(through, through.T))
    np.fill_diagonal(data, 0.0)

    dmat = DistanceMatrix(
        n=n,
        data=data,
        meta={"mode": mode, "eps": eps, "x": x, "h": skel.h, "m": skel.explore_rounds},
    )
    metrics = {
        "mode": mode,
        "eps": eps,
        "x": x,
        "h": skel.h,
        "explore_rounds": skel.explore_rounds,
        "skeleton_size": skel.size,
        "skeleton_edges": len(skel.edges),
        "resamples": skel.resamples,
        "transmit_skeleton": m_sk,
        "transmit_closest": m_cl,
        "rounds": net.round_no - 1,
        "infinite_pairs": int(np.isinf(data).sum()),
    }
    return ApspResult(dmat=dmat, skeleton=skel, net=net, metrics=metrics)
