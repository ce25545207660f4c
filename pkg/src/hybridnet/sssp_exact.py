"""Exact single-source distances driven by growing local views.

Phase i gives every node a view of its surroundings two hops wider than
before, and lets each node push its current distance label to everything
within i hops of it.  The push walks the shortest-path tree of the
node's local ball top-down, halving the untreated subtree with a
splitting node at every step, so a phase needs only logarithmically many
steps; the hand-off to each splitting node rides a global MIN
aggregation while the follow-up to tree children uses local edges.
Labels settle once the cumulative reach 1 + 2 + ... + i covers the
largest hop count of any shortest path, which bounds the phase count by
roughly twice the square root of that hop diameter.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

from .graphs import INF, WeightedGraph
from .sim import HybridConfig, HybridNetwork, Message


def triangular(i: int) -> int:
    """Hop reach of the labels after i phases: 1 + 2 + ... + i."""
    return i * (i + 1) // 2


def phases_for_reach(reach: int) -> int:
    """Smallest i with triangular(i) >= reach."""
    if reach <= 0:
        return 0
    i = math.isqrt(2 * reach)
    while triangular(i) < reach:
        i += 1
    while i > 1 and triangular(i - 1) >= reach:
        i -= 1
    return i


class BallTree:
    """Shortest-path tree of the subgraph a node sees within a hop radius.

    The subgraph contains every node within `radius` hops of the root and
    every edge with at least one endpoint strictly inside the radius,
    which is exactly what `radius` rounds of flooded edge announcements
    deliver.  Tree distances are computed over that subgraph without any
    further hop limit.  The parent of a node is its immediate predecessor
    on a shortest path from the root, ties broken toward the smallest
    identifier.
    """

    __slots__ = ("root", "radius", "hop", "dist", "parent", "children")

    def __init__(self, g: WeightedGraph, root: int, radius: int) -> None:
        self.root = root
        self.radius = radius
        adj = g._adj

        hop = {root: 0}
        frontier = deque([root])
        while frontier:
            u = frontier.popleft()
            hu = hop[u]
            if hu == radius:
                continue
            for v in adj[u]:
                if v not in hop:
                    hop[v] = hu + 1
                    frontier.append(v)
        self.hop = hop

        def usable(a: int, b: int) -> bool:
            ha = hop.get(a)
            hb = hop.get(b)
            if ha is None or hb is None:
                return False
            return ha < radius or hb < radius

        dist: dict[int, int] = {}
        heap: list[tuple[int, int]] = [(0, root)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in dist:
                continue
            dist[u] = d
            for v, w in adj[u].items():
                if v not in dist and usable(u, v):
                    heapq.heappush(heap, (d + w, v))
        self.dist = dist

        parent: dict[int, int] = {}
        children: dict[int, list[int]] = {}
        for x in dist:
            if x == root:
                continue
            dx = dist[x]
            best = None
            for y, w in adj[x].items():
                if y in dist and usable(x, y) and dist[y] + w == dx:
                    if best is None or y < best:
                        best = y
            parent[x] = best
            children.setdefault(best, []).append(x)
        for kids in children.values():
            kids.sort()
        self.parent = parent
        self.children = children


def pruned_subtree_sizes(
    children: dict[int, list[int]], top: int, skip: frozenset[int]
) -> dict[int, int]:
    """Size of each remaining subtree under `top` once the subtrees rooted
    at `skip` nodes are cut away."""
    if top in skip:
        return {}
    sizes: dict[int, int] = {}
    stack: list[tuple[int, bool]] = [(top, False)]
    while stack:
        node, done = stack.pop()
        if done:
            total = 1
            for c in children.get(node, ()):
                if c not in skip:
                    total += sizes[c]
            sizes[node] = total
        else:
            stack.append((node, True))
            for c in children.get(node, ()):
                if c not in skip:
                    stack.append((c, False))
    return sizes


def splitting_node(
    children: dict[int, list[int]],
    sizes: dict[int, int],
    top: int,
    skip: frozenset[int],
) -> int:
    """Node whose removal leaves no connected piece of the pruned subtree
    larger than half of it.

    Walks down from `top`, always entering the heaviest remaining child
    (smallest identifier on ties) while the part outside that child still
    holds less than half the nodes.
    """
    total = sizes[top]
    cur = top
    while True:
        heavy = None
        heavy_size = -1
        for c in children.get(cur, ()):
            if c in skip:
                continue
            s = sizes[c]
            if s > heavy_size:
                heavy = c
                heavy_size = s
        if heavy is None:
            return cur
        if 2 * (total - heavy_size) < total:
            cur = heavy
        else:
            return cur


@dataclass
class SsspResult:
    source: int
    dist: dict[int, float]
    phases: int
    net: HybridNetwork
    metrics: dict


def _recursion_phase(
    net: HybridNetwork,
    g: WeightedGraph,
    trees: dict[int, BallTree],
    held: dict[int, list[tuple[int, int, float, frozenset[int]]]],
    steps: int,
    lanes: int = 1,
) -> dict[tuple[int, int], float]:
    """Run the divide-and-conquer steps of one phase.

    `held` maps a node to its recursion messages (lane, root, value,
    excluded).  Lanes keep independent single-source recursions apart;
    the plain solver uses one lane.  Returns the candidate values
    collected per (lane, node).
    """
    adj = g._adj
    candidates: dict[tuple[int, int], float] = {}

    def offer(lane: int, node: int, value: float) -> None:
        key = (lane, node)
        old = candidates.get(key)
        if old is None or value < old:
            candidates[key] = value

    for _ in range(steps):
        groups: dict[tuple[int, int], list[tuple[int, int, float]]] = {}
        nxt: dict[int, list[tuple[int, int, float, frozenset[int]]]] = {}
        for v, msgs in held.items():
            for lane, root, d, excluded in msgs:
                offer(lane, v, d)
                tree = trees.get(root)
                if tree is None or v not in tree.dist:
                    continue
                sizes = pruned_subtree_sizes(tree.children, v, excluded)
                if sizes.get(v, 0) <= 1:
                    continue
                x = splitting_node(tree.children, sizes, v, excluded)
                nxt.setdefault(v, []).append((lane, root, d, excluded | {x}))
                reach = tree.dist[x] - tree.dist[v]
                groups.setdefault((x, lane), []).append((v, root, d + reach))

        if groups:
            ordered = sorted(groups.items())
            glist = [(contribs, x) for (x, _lane), contribs in ordered]
            winners = net.aggregate_min(
                glist,
                max_groups_per_target=max(1, lanes),
                lanes=max(1, lanes),
            )
        else:
            net.charge_rounds(net.aggregation_rounds())
            ordered = []
            winners = []

        deliveries: list[Message] = []
        for ((x, lane), _contribs), (value, root) in zip(ordered, winners):
            offer(lane, x, value)
            tree = trees[root]
            for c in tree.children.get(x, ()):
                deliveries.append(
                    Message(x, c, "local", (lane, root, value + adj[x][c]))
                )

        if deliveries:
            inboxes = net.run_round(deliveries)
        else:
            net.charge_rounds(1)
            inboxes = {}
        for node, received in inboxes.items():
            per_lane: dict[int, tuple[float, int]] = {}
            for msg in received:
                lane, root, value = msg.payload
                old = per_lane.get(lane)
                if old is None or (value, root) < old:
                    per_lane[lane] = (value, root)
            for lane, (value, root) in per_lane.items():
                nxt.setdefault(node, []).append((lane, root, value, frozenset()))
        held = nxt
    return candidates


def exact_sssp(
    g: WeightedGraph, source: int, cfg: HybridConfig | None = None
) -> SsspResult:
    """Exact distances from `source` to every node.

    Runs widening phases until one full phase passes without any label
    improving, which the nodes detect with a convergecast.
    """
    if source not in g.nodes():
        raise ValueError(f"source {source} out of range")
    net = HybridNetwork(g, cfg or HybridConfig())
    n = g.n
    steps = math.ceil(math.log2(max(2, n))) + 1
    label: dict[int, float] = {v: INF for v in g.nodes()}
    label[source] = 0
    per_phase_rounds: list[int] = []

    phase = 0
    while True:
        phase += 1
        net.set_phase(f"sssp.phase-{phase}")
        start = net.ledger.rounds_total
        net.charge_rounds(2, max_local=2 * g.m)

        trees = {
            v: BallTree(g, v, phase) for v in g.nodes() if label[v] < INF
        }
        held = {
            v: [(0, v, label[v], frozenset())]
            for v in g.nodes()
            if label[v] < INF
        }
        candidates = _recursion_phase(net, g, trees, held, steps)

        flags: dict[int, bool] = {}
        for v in g.nodes():
            new = min(label[v], candidates.get((0, v), INF))
            flags[v] = new == label[v]
            label[v] = new
        stable = net.convergecast_and(flags)
        per_phase_rounds.append(net.ledger.rounds_total - start)
        if stable:
            break

    return SsspResult(
        source=source,
        dist=label,
        phases=phase,
        net=net,
        metrics={
            "phases": phase,
            "steps_per_phase": steps,
            "per_phase_rounds": per_phase_rounds,
            "rounds_total": net.ledger.rounds_total,
            "label_reach": triangular(phase),
        },
    )


@dataclass
class HkSspResult:
    sources: tuple[int, ...]
    hop_budget: int
    reach: int
    phases: int
    dist: dict[int, dict[int, float]]
    net: HybridNetwork
    metrics: dict


def hk_ssp(
    g: WeightedGraph,
    sources: list[int] | tuple[int, ...],
    h: int,
    cfg: HybridConfig | None = None,
) -> HkSspResult:
    """Distances from several sources at once under a hop budget.

    Every node ends up with, per source, the weight of a real path no
    heavier than the best path of at most `h` hops; when `h` covers the
    hop diameter this is the exact distance.  The views are widened once
    to a fixed radius of about sqrt(k*h) hops and then h/radius phases
    push labels that far each, all source recursions running as parallel
    lanes of the same step schedule.
    """
    srcs = tuple(sorted(set(sources)))
    if not srcs:
        raise ValueError("need at least one source")
    for s in srcs:
        if s not in g.nodes():
            raise ValueError(f"source {s} out of range")
    if h < 1:
        raise ValueError("hop budget must be at least 1")
    net = HybridNetwork(g, cfg or HybridConfig())
    n = g.n
    k = len(srcs)
    reach = max(1, math.ceil(math.sqrt(k * h)))
    phases = max(1, math.ceil(h / reach))
    steps = math.ceil(math.log2(max(2, n))) + 1

    label: dict[int, dict[int, float]] = {
        v: {s: INF for s in srcs} for v in g.nodes()
    }
    for s in srcs:
        label[s][s] = 0

    net.set_phase("hk.view")
    net.charge_rounds(2 * reach, max_local=2 * g.m)

    trees: dict[int, BallTree] = {}
    per_phase_rounds: list[int] = []
    for phase in range(1, phases + 1):
        net.set_phase(f"hk.phase-{phase}")
        start = net.ledger.rounds_total
        held: dict[int, list[tuple[int, int, float, frozenset[int]]]] = {}
        for v in g.nodes():
            for lane, s in enumerate(srcs):
                if label[v][s] < INF:
                    if v not in trees:
                        trees[v] = BallTree(g, v, reach)
                    held.setdefault(v, []).append(
                        (lane, v, label[v][s], frozenset())
                    )
        candidates = _recursion_phase(net, g, trees, held, steps, lanes=k)
        for (lane, v), value in candidates.items():
            s = srcs[lane]
            if value < label[v][s]:
                label[v][s] = value
        per_phase_rounds.append(net.ledger.rounds_total - start)

    return HkSspResult(
        sources=srcs,
        hop_budget=h,
        reach=reach,
        phases=phases,
        dist=label,
        net=net,
        metrics={
            "phases": phases,
            "reach": reach,
            "steps_per_phase": steps,
            "per_phase_rounds": per_phase_rounds,
            "rounds_total": net.ledger.rounds_total,
        },
    )
