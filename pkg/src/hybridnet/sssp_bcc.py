"""Approximate single-source distances by simulating a broadcast clique.

A sampled set of nodes (always containing the source) becomes the
vertex set of a bounded-hop overlay.  One round of the broadcast model,
where every overlay member announces one small message to all others,
is realised by a full token dissemination run over the hybrid network.
Iterating label exchanges on the overlay for its hop diameter yields
the source distances inside the overlay exactly, and every node then
combines the published overlay labels with its own bounded-hop
distances to the overlay members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .apsp import Skeleton, construct_skeleton
from .graphs import INF, WeightedGraph
from .oracles import DistanceMap
from .sim import HybridConfig, HybridNetwork
from .tokens import Token, token_dissemination


@dataclass
class BccSession:
    """State of one broadcast-clique simulation on the hybrid network.

    Each simulated round carries one broadcast per participant; the
    transcript of a round is the set of broadcasts a participant ends up
    knowing, which must equal the full broadcast set at every
    participant.
    """

    participants: tuple[int, ...]
    net: HybridNetwork
    spread: int | None = None
    rounds: int = 0
    transcripts: list[dict[int, tuple]] = field(default_factory=list)
    complete_rounds: list[bool] = field(default_factory=list)

    @property
    def all_complete(self) -> bool:
        return all(self.complete_rounds)


def simulate_bcc_round(
    session: BccSession, broadcasts: dict[int, tuple]
) -> BccSession:
    """Deliver one broadcast per participant to every node.

    The broadcasts ride one token dissemination run; afterwards each
    participant's transcript is checked for exact equality with the full
    broadcast set and the result is recorded on the session.
    """
    if set(broadcasts) != set(session.participants):
        raise ValueError("need exactly one broadcast per participant")
    session.rounds += 1
    session.net.set_phase(f"bcc.round-{session.rounds}")
    order = sorted(broadcasts)
    initial = {u: [Token(tuple(broadcasts[u]))] for u in order}
    result = token_dissemination(session.net, initial, x=session.spread)
    k = len(order)
    counts = result.state.known_counts()
    complete = all(counts[u - 1] == k for u in session.participants)
    session.transcripts.append(dict(broadcasts))
    session.complete_rounds.append(bool(complete))
    return session


def _hop_diameter(members: tuple[int, ...], edges: list[tuple[int, int, float]]) -> int:
    """Largest hop count of a shortest hop-path between connected members."""
    from . import _kernels as K

    m = len(members)
    if m <= 1 or not edges:
        return 0
    pos = {v: i for i, v in enumerate(members)}
    deg = [0] * m
    for u, v, _ in edges:
        deg[pos[u]] += 1
        deg[pos[v]] += 1
    indptr = np.zeros(m + 1, dtype=np.intp)
    indptr[1:] = np.cumsum(deg)
    nbrs = np.empty(indptr[-1], dtype=np.intp)
    fill = indptr[:-1].copy()
    for u, v, _ in edges:
        i, j = pos[u], pos[v]
        nbrs[fill[i]] = j
        fill[i] += 1
        nbrs[fill[j]] = i
        fill[j] += 1
    wgts = np.ones(indptr[-1], dtype=np.float64)
    src = np.arange(m, dtype=np.intp)
    _, last_change = K.hop_limited_multisource(indptr, nbrs, wgts, src, m)
    return int(last_change)


def skeleton_sssp_bcc(
    session: BccSession, skel: Skeleton, eps: float, source: int
) -> dict[int, float]:
    """Source distances inside the overlay, made known to all nodes.

    Every participant broadcasts its current label each simulated round;
    relaxing over the overlay edges for as many rounds as the overlay's
    hop diameter settles the labels exactly, so any positive `eps`
    target is met with room to spare.  A final dissemination run
    publishes the labels network-wide.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    members = tuple(skel.marked)
    if source not in members:
        raise ValueError("source must be an overlay member")
    label: dict[int, float] = {u: INF for u in members}
    label[source] = 0.0

    nbrs: dict[int, list[tuple[int, float]]] = {u: [] for u in members}
    for u, v, w in skel.edges:
        nbrs[u].append((v, w))
        nbrs[v].append((u, w))

    rounds = _hop_diameter(members, skel.edges)
    for _ in range(rounds):
        broadcasts = {u: (u, label[u]) for u in members}
        simulate_bcc_round(session, broadcasts)
        new = dict(label)
        for u in members:
            best = label[u]
            for v, w in nbrs[u]:
                cand = label[v] + w
                if cand < best:
                    best = cand
            new[u] = best
        label = new

    session.net.set_phase("bcc.publish-labels")
    initial = {u: [Token((u, label[u]))] for u in members}
    token_dissemination(session.net, initial, x=session.spread)
    return label


@dataclass
class BccSsspResult:
    dmap: DistanceMap
    skeleton: Skeleton
    session: BccSession
    net: HybridNetwork
    metrics: dict


def default_x_bcc(n: int, eps: float) -> int:
    """Sampling parameter n^(1/3) / eps^6, capped at n."""
    raw = math.ceil(n ** (1.0 / 3.0) * eps ** (-6.0))
    return max(1, min(n, raw))


def approx_sssp_bcc(
    g: WeightedGraph,
    source: int,
    eps: float,
    cfg: HybridConfig | None = None,
    x: int | None = None,
    xi: float = 8.0,
    td_x: int | None = None,
) -> BccSsspResult:
    """(1+eps)-style approximate distances from `source` to every node.

    Nodes are marked with probability 1/x (the source always); a
    bounded-hop label exchange gives every node its distances to the
    marked set; the broadcast-clique simulation settles the source
    distances on the overlay; and each node takes the best combination
    of a direct bounded-hop path and a path through a marked node.
    Every reported value is the weight of a real path, so estimates
    never undershoot the true distance.  When the cap x = n applies the
    whole graph is marked and the result is exact.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if source not in g.nodes():
        raise ValueError(f"source {source} out of range")
    net = HybridNetwork(g, cfg or HybridConfig())
    n = g.n
    if x is None:
        x = default_x_bcc(n, eps)
    if x < 1 or x > n:
        raise ValueError("sampling parameter x must be in [1, n]")

    special = tuple(g.nodes()) if x >= n else (source,)
    net.set_phase("bcc.skeleton")
    skel = construct_skeleton(
        net, x, xi=xi, special=special, explore="h", keep_all_rows=False
    )

    net.set_phase("bcc.publish-members")
    token_dissemination(
        net, {u: [Token((u,))] for u in skel.marked}, x=td_x
    )

    session = BccSession(
        participants=tuple(skel.marked), net=net, spread=td_x
    )
    label = skeleton_sssp_bcc(session, skel, eps, source)

    midx = [u - 1 for u in skel.marked]
    lab = np.array([label[u] for u in skel.marked], dtype=np.float64)
    srow = skel.dist_hm[skel.marked.index(source)]
    through = lab[:, None] + skel.dist_hm
    combined = np.minimum(srow, np.min(through, axis=0))
    combined[source - 1] = 0.0

    dist = {v: float(combined[v - 1]) for v in g.nodes()}
    dmap = DistanceMap(source=source, dist=dist, hop_limit=None)
    metrics = {
        "x": x,
        "h": skel.h,
        "marked": len(skel.marked),
        "bcc_rounds": session.rounds,
        "transcripts_complete": session.all_complete,
        "rounds_total": net.ledger.rounds_total,
        "dropped_total": net.ledger.dropped_total(),
    }
    return BccSsspResult(
        dmap=dmap, skeleton=skel, session=session, net=net, metrics=metrics
    )
