"""Sparse distance-preserving overlays on a marked node subset.

The core construction covers marked-pair distances one geometric band at a
time.  Within a band a few randomly sampled marked nodes probe their
surroundings with capped relaxation sweeps and attach overlay edges to every
marked node they can see; regions already served by a sampled probe retire
from the rest of the band.  Stacking the construction on top of a
lightweight base overlay gives a recursive hierarchy whose union answers
single-source queries with a fixed budget of relaxation sweeps.

Every overlay edge records the host-graph path it abbreviates (the edge
weight equals the recomputed path weight) and a responsible endpoint, so
per-node bookkeeping stays bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import INF, GraphError, WeightedGraph, bernoulli_indices, derived_rng
from .oracles import DistanceMap
from .sim import HybridConfig, HybridNetwork

__all__ = [
    "SkeletonSpanner",
    "SpannerFault",
    "SpannerHierarchy",
    "RecursiveSsspResult",
    "ball",
    "spanner_stage",
    "build_skeleton_spanner",
    "baswana_sen",
    "build_hierarchy",
    "recursive_sssp",
    "write_spanner",
]


class SpannerFault(RuntimeError):
    """A stage finished in a state its own sampling rule rules out."""


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _stream(net: HybridNetwork | None, *salt):
    if net is not None:
        return net.stream_rng(*salt)
    return derived_rng(0, *salt)


# ---------------------------------------------------------------------------
# capped relaxation probes


def _capped_sweeps(n, eu, ev, ew, root, hops, cap, keep_layers=False):
    """Hop-bounded relaxation from root over 1-based edge arrays.

    Labels above cap are discarded after every sweep; prefixes of any
    surviving label never exceed cap themselves, so the discard cannot cut
    off a path that still matters.  With keep_layers the per-sweep label
    arrays are kept so witness paths can be walked back exactly.
    """
    dist = np.full(n + 1, INF)
    dist[root] = 0.0
    layers = [dist.copy()] if keep_layers else None
    for _ in range(hops):
        nxt = dist.copy()
        if eu.size:
            np.minimum.at(nxt, ev, dist[eu] + ew)
            np.minimum.at(nxt, eu, dist[ev] + ew)
        nxt[nxt > cap] = INF
        if np.array_equal(nxt, dist):
            break
        dist = nxt
        if keep_layers:
            layers.append(dist.copy())
    return dist, layers


def _walk_back(adj, layers, root, v):
    """Path whose weight equals v's final label, as a node tuple root..v.

    Follows the layer history backwards; among equal predecessors the
    smallest ID wins.
    """
    t = len(layers) - 1
    path = [v]
    cur = v
    while cur != root:
        d = layers[t][cur]
        while t > 0 and layers[t - 1][cur] == d:
            t -= 1
        prev = layers[t - 1]
        step = None
        for u in sorted(adj[cur]):
            if prev[u] + adj[cur][u] == d:
                step = u
                break
        if step is None:
            raise SpannerFault(f"no predecessor for node {cur} at layer {t}")
        path.append(step)
        cur = step
        t -= 1
    path.reverse()
    return tuple(path)


def _active_arrays(g: WeightedGraph, active: set[int]):
    """1-based edge arrays of the subgraph induced by the active set."""
    eu, ev, ew = g.edge_arrays()
    eu = eu + 1
    ev = ev + 1
    mask = np.zeros(g.n + 1, dtype=bool)
    for node in active:
        mask[node] = True
    keep = mask[eu] & mask[ev]
    return eu[keep], ev[keep], ew[keep]


def ball(g: WeightedGraph, r: int, x: int, L: float, h: int,
         active: set[int] | None = None) -> set[int]:
    """Nodes whose (h*x)-hop-limited distance from r is at most x*L.

    The probe runs on the subgraph induced by ``active`` when given.
    """
    if x < 1:
        raise ValueError("radius multiplier x must be >= 1")
    if L < 1:
        raise ValueError("band length L must be >= 1")
    if active is None:
        active = set(g.nodes())
    if r not in active:
        raise ValueError(f"probe root {r} is not active")
    eu, ev, ew = _active_arrays(g, active)
    dist, _ = _capped_sweeps(g.n, eu, ev, ew, r, h * x, x * L)
    return {v for v in range(1, g.n + 1) if dist[v] <= x * L}


# ---------------------------------------------------------------------------
# banded overlay construction


@dataclass
class SkeletonSpanner:
    """Overlay graph on a marked subset, with per-edge witness paths.

    ``edges`` maps canonical pairs to weights; ``witness`` holds the host
    path each edge abbreviates, oriented from the smaller endpoint;
    ``responsible`` names the endpoint that maintains the edge.
    """

    n: int
    marked: tuple[int, ...]
    edges: dict[tuple[int, int], int]
    responsible: dict[tuple[int, int], int]
    witness: dict[tuple[int, int], tuple[int, ...]]
    h: int
    k: int
    eta: float
    W: int
    scale: int = 1
    stats: dict = field(default_factory=dict)

    def resp_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for node in self.responsible.values():
            out[node] = out.get(node, 0) + 1
        return out

    def delta(self) -> int:
        """Largest per-node responsibility count."""
        return max(self.resp_counts().values(), default=0)

    def to_graph(self) -> WeightedGraph:
        g = WeightedGraph(
            self.n,
            [(u, v, w) for (u, v), w in sorted(self.edges.items())],
            validate=False,
        )
        g.meta["resp_count"] = self.resp_counts()
        return g


def _host_resp(g: WeightedGraph):
    counts = g.meta.get("resp_count")
    if counts:
        return lambda v: counts.get(v, 0)
    return lambda v: len(g._adj[v])


def spanner_stage(g: WeightedGraph, M, i: int, h: int, k: int, eta: float,
                  net: HybridNetwork | None = None, phase_prefix: str = "spanner",
                  stats: dict | None = None):
    """Overlay edges serving marked-pair distances in [eta**i / eta, eta**i].

    Runs k sampling phases.  Phase j samples each still-active marked node
    with probability |M| ** ((j+1)/k - 1); a sampled node attaches an edge to
    every marked node its (k-j)-fold probe reaches, then its (k-j-1)-fold
    probe retires from the stage.  The last phase samples everything left,
    so no marked node can stay active past the end.

    Returns {pair: (weight, responsible, witness path)}.
    """
    marked = sorted(set(M))
    m_size = len(marked)
    edges: dict[tuple[int, int], tuple[int, int, tuple[int, ...]]] = {}
    if m_size == 0:
        return edges
    L = float(eta) ** i
    active = set(g.nodes())
    resp = _host_resp(g)
    if stats is not None:
        stats.setdefault("membership", [])
        stats.setdefault("sampled", [])
    for j in range(k):
        if net is not None:
            net.set_phase(f"{phase_prefix}.stage-{i}.phase-{j}")
        live = [v for v in marked if v in active]
        prob = m_size ** ((j + 1) / k - 1.0)
        rng = _stream(net, "stage-sample", phase_prefix, i, j)
        sampled = [live[t] for t in bernoulli_indices(rng, len(live), prob)]
        if stats is not None:
            stats["sampled"].append(list(sampled))
        eu, ev, ew = _active_arrays(g, active)
        x_edge = k - j
        x_deact = k - j - 1
        membership = np.zeros(g.n + 1, dtype=np.int64)
        retired: set[int] = set()
        for r in sampled:
            dist, layers = _capped_sweeps(
                g.n, eu, ev, ew, r, h * x_edge, x_edge * L, keep_layers=True
            )
            in_ball = dist <= x_edge * L
            membership += in_ball
            for v in marked:
                if v == r or not in_ball[v]:
                    continue
                path = _walk_back(g._adj, layers, r, v)
                weight = sum(g._adj[a][b] for a, b in zip(path, path[1:]))
                key = _edge_key(v, r)
                kept = edges.get(key)
                if kept is None or weight < kept[0]:
                    if path[0] != key[0]:
                        path = path[::-1]
                    edges[key] = (weight, v, path)
            if x_deact == 0:
                retired.add(r)
            else:
                dist2, _ = _capped_sweeps(
                    g.n, eu, ev, ew, r, h * x_deact, x_deact * L
                )
                retired.update(
                    v for v in range(1, g.n + 1) if dist2[v] <= x_deact * L
                )
        active -= retired
        if stats is not None:
            stats["membership"].append(membership[1:].copy())
        if net is not None:
            sweeps = max(1, h * x_edge + h * x_deact)
            peak = 0
            if sampled:
                loaded = np.flatnonzero(membership)
                peak = max(
                    (int(membership[v]) * (resp(int(v)) + 1) for v in loaded),
                    default=0,
                )
            peak = max(1, peak)
            base = net.aggregation_rounds()
            stretch = max(1, math.ceil(peak / net.gamma))
            per_round = math.ceil(peak / stretch)
            net.charge_rounds(
                sweeps * base * stretch,
                max_global_send=per_round,
                max_global_recv=per_round,
            )
    leftover = [v for v in marked if v in active]
    if leftover:
        raise SpannerFault(f"marked nodes still active after last phase: {leftover}")
    if stats is not None:
        stats["active_after"] = active
    return edges


def build_skeleton_spanner(g: WeightedGraph, M, h: int, k: int, eta: float,
                           W: int | None = None, net: HybridNetwork | None = None,
                           phase_prefix: str = "spanner") -> SkeletonSpanner:
    """Union of banded stages: an overlay whose marked pairs within h hops
    get a two-edge path of stretch at most 2*eta*k.

    Edge weights must stay at or below W/h.  When W is omitted it is set to
    h times the largest weight, which always satisfies the bound; an
    explicit smaller W triggers probing on integer-rescaled weights (band
    membership only; recorded edges keep true path weights).
    """
    if h < 1 or k < 1:
        raise ValueError("need h >= 1 and k >= 1")
    if eta <= 1:
        raise ValueError("band growth eta must exceed 1")
    marked = tuple(sorted(set(M)))
    for v in marked:
        if not 1 <= v <= g.n:
            raise GraphError(f"marked node {v} outside 1..{g.n}")
    wmax = int(g._ew.max()) if g.m else 1
    if W is None:
        W = h * wmax
    scale = 1
    probe_graph = g
    if wmax > W / h:
        if W < h:
            raise GraphError(f"W={W} cannot fit weights >= 1 under h={h}")
        scale = math.ceil(wmax / (W // h))
        probe_graph = WeightedGraph(
            g.n,
            [(u, v, math.ceil(w / scale)) for u, v, w in g.edges()],
            validate=False,
        )
        probe_graph.meta.update(g.meta)
    stages = max(1, math.ceil(round(math.log(W) / math.log(eta), 12)))
    edges: dict[tuple[int, int], tuple[int, int, tuple[int, ...]]] = {}
    for i in range(1, stages + 1):
        stage_edges = spanner_stage(
            probe_graph, marked, i, h, k, eta, net=net, phase_prefix=phase_prefix
        )
        for key, (_, who, path) in stage_edges.items():
            weight = sum(g._adj[a][b] for a, b in zip(path, path[1:]))
            kept = edges.get(key)
            if kept is None or weight < kept[0]:
                edges[key] = (weight, who, path)
    return SkeletonSpanner(
        n=g.n,
        marked=marked,
        edges={key: val[0] for key, val in edges.items()},
        responsible={key: val[1] for key, val in edges.items()},
        witness={key: val[2] for key, val in edges.items()},
        h=h,
        k=k,
        eta=float(eta),
        W=int(W),
        scale=scale,
    )


# ---------------------------------------------------------------------------
# base overlay on the full node set


def baswana_sen(g: WeightedGraph, k: int,
                net: HybridNetwork | None = None) -> SkeletonSpanner:
    """Cluster-sampling subgraph of the whole node set with stretch 2k-1.

    k-1 merge rounds shrink a clustering by sampling centers; a node of a
    dropped cluster joins the lightest sampled neighbor cluster, keeping
    that connecting edge, plus one lightest edge to every strictly lighter
    neighbor cluster.  A node seeing no sampled cluster keeps one lightest
    edge per neighbor cluster and retires.  A final pass connects every
    node to each adjacent surviving cluster.  All ties break by weight,
    then cluster-center ID, then neighbor ID.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    n = g.n
    cluster: dict[int, int | None] = {v: v for v in g.nodes()}
    rem = {v: dict(g._adj[v]) for v in g.nodes()}
    edges: dict[tuple[int, int], int] = {}
    responsible: dict[tuple[int, int], int] = {}
    witness: dict[tuple[int, int], tuple[int, int]] = {}
    prob = n ** (-1.0 / k)

    def take(v: int, u: int) -> None:
        key = _edge_key(v, u)
        if key not in edges:
            edges[key] = g._adj[v][u]
            responsible[key] = v
            witness[key] = key

    def drop(v: int, u: int) -> None:
        rem[v].pop(u, None)
        rem[u].pop(v, None)

    def lightest_by_cluster(v: int) -> dict[int, tuple[int, int]]:
        groups: dict[int, tuple[int, int]] = {}
        own = cluster[v]
        for u, w in rem[v].items():
            cu = cluster[u]
            if cu is None or cu == own:
                continue
            if cu not in groups or (w, u) < groups[cu]:
                groups[cu] = (w, u)
        return groups

    for it in range(1, k):
        if net is not None:
            net.set_phase(f"spanner.base.merge-{it}")
            net.charge_rounds(2 * it + 1, max_local=2)
        centers = sorted({c for c in cluster.values() if c is not None})
        sampled = {
            c for c in centers if _stream(net, "base-sample", it, c).random() < prob
        }
        nxt: dict[int, int | None] = {}
        for v in sorted(g.nodes()):
            cv = cluster[v]
            if cv is None or cv in sampled:
                nxt[v] = cv
                continue
            groups = lightest_by_cluster(v)
            in_sampled = {c: wu for c, wu in groups.items() if c in sampled}
            if not in_sampled:
                for c in sorted(groups):
                    take(v, groups[c][1])
                for u in list(rem[v]):
                    drop(v, u)
                nxt[v] = None
                continue
            cstar, (wstar, ustar) = min(
                in_sampled.items(), key=lambda kv: (kv[1][0], kv[0])
            )
            take(v, ustar)
            nxt[v] = cstar
            for u in [u for u in rem[v] if cluster[u] == cstar]:
                drop(v, u)
            for c in sorted(groups):
                if c == cstar:
                    continue
                w, u = groups[c]
                if w < wstar:
                    take(v, u)
                    for u2 in [x for x in rem[v] if cluster[x] == c]:
                        drop(v, u2)
        cluster = nxt
    if net is not None:
        net.set_phase("spanner.base.connect")
        net.charge_rounds(2 * k, max_local=2)
    for v in sorted(g.nodes()):
        groups = lightest_by_cluster(v)
        for c in sorted(groups):
            take(v, groups[c][1])
    return SkeletonSpanner(
        n=n,
        marked=tuple(g.nodes()),
        edges=edges,
        responsible=responsible,
        witness=witness,
        h=1,
        k=k,
        eta=1.0,
        W=g.W,
        scale=1,
    )


# ---------------------------------------------------------------------------
# recursive hierarchy and single-source queries over its union


@dataclass
class SpannerHierarchy:
    """Stack of overlays; level 1 covers all nodes, deeper levels cover
    nested sampled subsets of shrinking size."""

    levels: list[SkeletonSpanner]
    alpha: float
    h: int
    k: int
    eta: float

    @property
    def depth(self) -> int:
        return len(self.levels)

    def union_edges(self) -> dict[tuple[int, int], int]:
        merged: dict[tuple[int, int], int] = {}
        for level in self.levels:
            for key, w in level.edges.items():
                if key not in merged or w < merged[key]:
                    merged[key] = w
        return merged

    def union_resp_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for level in self.levels:
            for node, cnt in level.resp_counts().items():
                out[node] = out.get(node, 0) + cnt
        return out


def build_hierarchy(g: WeightedGraph, alpha: float,
                    net: HybridNetwork | None = None, eta: float = 2.0,
                    c: int = 4, k: int | None = None) -> SpannerHierarchy:
    """Recursive overlay stack with locality parameter alpha.

    Level 1 is the cluster-sampling base overlay.  Level i >= 2 marks a
    sample of the previous level's node set (rate ln(n)/alpha at level 2,
    then 1/alpha) and builds the banded overlay of the previous level's
    graph on those marks.  Construction stops the first time the sample
    comes out empty.
    """
    if alpha < 5:
        raise ValueError("alpha must be at least 5")
    n = g.n
    if k is None:
        k = max(2, round(math.log(n) / math.log(alpha)))
    h = int(math.ceil(c * alpha))
    if net is not None:
        net.set_phase("spanner.base")
    base = baswana_sen(g, k, net=net)
    levels = [base]
    host = base.to_graph()
    pool = list(g.nodes())
    level_no = 2
    while True:
        rate = math.log(n) / alpha if level_no == 2 else 1.0 / alpha
        rng = _stream(net, "hier-mark", level_no)
        marked = [pool[t] for t in bernoulli_indices(rng, len(pool), min(1.0, rate))]
        if not marked:
            break
        sp = build_skeleton_spanner(
            host, marked, h=h, k=k, eta=eta, net=net,
            phase_prefix=f"spanner.level-{level_no}",
        )
        levels.append(sp)
        host = sp.to_graph()
        pool = marked
        level_no += 1
    return SpannerHierarchy(levels=levels, alpha=alpha, h=h, k=k, eta=float(eta))


@dataclass
class RecursiveSsspResult:
    source: int
    dist: DistanceMap
    hierarchy: SpannerHierarchy
    net: HybridNetwork
    metrics: dict


def recursive_sssp(g: WeightedGraph, s: int, alpha: float,
                   cfg: HybridConfig | None = None, eta: float = 2.0,
                   c: int = 4, c_bfs: int = 2,
                   k: int | None = None) -> RecursiveSsspResult:
    """Approximate single-source distances via the recursive overlay stack.

    After building the hierarchy, a fixed budget of relaxation sweeps runs
    over the union of all levels; every node reports the smallest label it
    received.  Labels are weights of real paths, so they never undershoot
    the true distance.
    """
    if not 1 <= s <= g.n:
        raise GraphError(f"source {s} outside 1..{g.n}")
    net = HybridNetwork(g, cfg or HybridConfig())
    hier = build_hierarchy(g, alpha, net=net, eta=eta, c=c, k=k)
    merged = hier.union_edges()
    resp = hier.union_resp_counts()
    rounds = int(math.ceil(c_bfs * alpha * max(1.0, math.log(g.n) / math.log(alpha))))
    net.set_phase("spanner.query")
    if merged:
        keys = sorted(merged)
        eu = np.array([a for a, _ in keys], dtype=np.intp)
        ev = np.array([b for _, b in keys], dtype=np.intp)
        ew = np.array([merged[key] for key in keys], dtype=np.float64)
    else:
        eu = ev = np.empty(0, dtype=np.intp)
        ew = np.empty(0, dtype=np.float64)
    dist = np.full(g.n + 1, INF)
    dist[s] = 0.0
    peak = max((cnt + 1 for cnt in resp.values()), default=1)
    base = net.aggregation_rounds()
    stretch = max(1, math.ceil(peak / net.gamma))
    per_round = math.ceil(peak / stretch)
    done = 0
    for _ in range(rounds):
        nxt = dist.copy()
        if eu.size:
            np.minimum.at(nxt, ev, dist[eu] + ew)
            np.minimum.at(nxt, eu, dist[ev] + ew)
        done += 1
        if np.array_equal(nxt, dist):
            break
        dist = nxt
    net.charge_rounds(
        rounds * base * stretch,
        max_global_send=per_round,
        max_global_recv=per_round,
    )
    dmap = DistanceMap(
        source=s,
        dist={v: float(dist[v]) for v in g.nodes() if dist[v] != INF},
        hop_limit=None,
    )
    depth = hier.depth
    metrics = {
        "levels": depth,
        "level_nodes": [len(level.marked) for level in hier.levels],
        "level_edges": [len(level.edges) for level in hier.levels],
        "level_delta": [level.delta() for level in hier.levels],
        "k": hier.k,
        "h": hier.h,
        "eta": hier.eta,
        "stretch_budget": (2 * hier.eta * hier.k) ** depth * (2 * hier.k - 1),
        "union_edges": len(merged),
        "query_sweeps": rounds,
        "query_sweeps_used": done,
        "rounds_total": net.ledger.rounds_total,
        "dropped_total": net.ledger.dropped_total(),
    }
    return RecursiveSsspResult(
        source=s, dist=dmap, hierarchy=hier, net=net, metrics=metrics
    )


def write_spanner(sp: SkeletonSpanner, path: str) -> None:
    """Graph file plus a '<path>.witness' sidecar, one line per edge in the
    form 'u v w : v0 v1 ... vp'."""
    from .graphs import write_graph

    write_graph(sp.to_graph(), path)
    with open(path + ".witness", "w", encoding="ascii") as fh:
        for (u, v), w in sorted(sp.edges.items()):
            nodes = " ".join(str(x) for x in sp.witness[(u, v)])
            fh.write(f"{u} {v} {w} : {nodes}\n")
