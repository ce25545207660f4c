"""Token dissemination: make k small tokens known to every node.

Pipeline: balancing spreads token ownership roughly evenly over the global
channel, multiplication doubles copies while k is far below n, seeding
plants each token at a random node subset, and a final bounded local flood
makes knowledge complete.  Ownership moves with the messages; knowledge
only ever grows.

Send budgets per node and round equal the global capacity gamma.  The
flood runs through a per-token random start-delay schedule whenever the
local capacity is finite, which keeps per-edge load within capacity with
high probability; overloaded edges (rare) drop the highest token ids and
the drop is visible both in the ledger and in the resulting knowledge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .graphs import INF, bernoulli_indices
from .sim import CapacityFault, HybridNetwork, Message


class SeedingFault(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    payload: tuple


class TokenState:
    """Ownership and knowledge for one dissemination run."""

    def __init__(self, net: HybridNetwork, initial: dict[int, list[Token]]):
        self.net = net
        n = net.g.n
        self.n = n
        self.tokens: list[Token] = []
        self.origin: list[int] = []
        self.care: list[list[int]] = [[] for _ in range(n + 1)]
        budget = net.cfg.message_field_budget
        for v in sorted(initial):
            for tok in initial[v]:
                if not isinstance(tok, Token):
                    raise TypeError("initial placement must hold Token objects")
                if len(tok.payload) > budget:
                    raise ValueError(
                        f"token payload exceeds field budget {budget}: {tok}"
                    )
                tid = len(self.tokens)
                self.tokens.append(tok)
                self.origin.append(v)
                self.care[v].append(tid)
        self.k = len(self.tokens)
        self.words = max(1, (self.k + 63) >> 6)
        self.known = np.zeros((n, self.words), dtype=np.uint64)
        self.seeded = np.zeros((n, self.words), dtype=np.uint64)
        self.seeded_nodes: list[list[int]] = [[] for _ in range(self.k)]
        for tid, v in enumerate(self.origin):
            self._learn(v, tid)

    def _learn(self, v: int, tid: int) -> None:
        self.known[v - 1, tid >> 6] |= np.uint64(1 << (tid & 63))

    def knows(self, v: int, tid: int) -> bool:
        return bool(self.known[v - 1, tid >> 6] >> np.uint64(tid & 63) & np.uint64(1))

    def known_counts(self) -> np.ndarray:
        return K.popcount_rows(self.known)

    def complete(self) -> bool:
        if self.k == 0:
            return True
        return int(self.known_counts().min()) == self.k

    def care_sizes(self) -> list[int]:
        return [len(self.care[v]) for v in range(1, self.n + 1)]


def _deliver_care(state: TokenState, inboxes, new_care) -> None:
    for dst, msgs in inboxes.items():
        for m in msgs:
            tid = m.payload[0]
            new_care[dst].append(tid)
            state._learn(dst, tid)


def token_balancing(net: HybridNetwork, state: TokenState) -> dict:
    """Move every initially held token to an independently uniform node.

    Each node sends min(sigma, remaining) of its initial tokens per round,
    one token per message; a node drawing itself as target just keeps the
    token.  Received tokens form the new ownership sets.
    """
    net.set_phase("td.balance")
    sigma = net.gamma
    n = state.n
    ell_init = max(state.care_sizes(), default=0)
    rounds = math.ceil(ell_init / sigma) if ell_init else 0
    pending = [list(state.care[v]) for v in range(state.n + 1)]
    new_care: list[list[int]] = [[] for _ in range(n + 1)]
    for _ in range(rounds):
        msgs = []
        for v in range(1, n + 1):
            if not pending[v]:
                continue
            rng = net.node_rng(v)
            batch, pending[v] = pending[v][:sigma], pending[v][sigma:]
            for tid in batch:
                u = rng.randint(1, n)
                if u == v:
                    new_care[v].append(tid)
                else:
                    msgs.append(Message(v, u, "global", (tid,)))
        inboxes = net.run_round(msgs)
        _deliver_care(state, inboxes, new_care)
    assert not any(pending), "balancing must drain every initial set"
    state.care = new_care
    if net.cfg.gamma_recv is None:
        assert sum(len(c) for c in new_care) == state.k
    return {"rounds": rounds, "ell_init": ell_init}


def token_multiplication(net: HybridNetwork, state: TokenState) -> dict:
    """Double token copies until there are close to n of them.

    Runs only when k <= n/2.  In each of floor(log2(n/k)) phases every held
    copy is sent to two uniform targets and dies; the copies received in the
    phase form the next ownership multiset, so counts double exactly.
    """
    net.set_phase("td.multiply")
    n, k = state.n, state.k
    if k == 0 or k > n // 2:
        return {"skipped": True, "phases": 0, "rounds": 0}
    sigma = net.gamma
    phases = int(math.floor(math.log2(n / k)))
    rounds_total = 0
    for phase in range(phases):
        pending = [
            [tid for tid in state.care[v] for _ in range(2)]
            for v in range(n + 1)
        ]
        phase_rounds = max(math.ceil(len(p) / sigma) for p in pending)
        new_care: list[list[int]] = [[] for _ in range(n + 1)]
        for _ in range(phase_rounds):
            msgs = []
            for v in range(1, n + 1):
                if not pending[v]:
                    continue
                rng = net.node_rng(v)
                batch, pending[v] = pending[v][:sigma], pending[v][sigma:]
                for tid in batch:
                    u = rng.randint(1, n)
                    if u == v:
                        new_care[v].append(tid)
                    else:
                        msgs.append(Message(v, u, "global", (tid,)))
            inboxes = net.run_round(msgs)
            _deliver_care(state, inboxes, new_care)
        state.care = new_care
        rounds_total += phase_rounds
        copies = sum(len(c) for c in state.care)
        if net.cfg.gamma_recv is None:
            assert copies == k * 2 ** (phase + 1), (copies, k, phase)
    return {
        "skipped": False,
        "phases": phases,
        "rounds": rounds_total,
        "copies": sum(len(c) for c in state.care),
    }


def seeding_rate(n: int, k: int, x: int, zeta: float) -> float:
    """Per-node planting probability for one token copy."""
    if k >= n / (2.0 * zeta * math.log(n)):
        return 1.0 / x
    return min(1.0, (k / (n * x)) * 2.0 * zeta * math.log(n))


def token_seeding(net: HybridNetwork, state: TokenState, x: int, zeta: float = 4.0) -> dict:
    """Plant every token copy at a random subset of nodes.

    For each held copy the holder samples each node independently with the
    rate for (n, k, x) and sends the token there in batches of sigma per
    round, skipping itself.  Nodes that receive a token here become the
    flood sources of the final local phase.
    """
    net.set_phase("td.seed")
    n, k = state.n, state.k
    if k == 0:
        return {"rounds": 0, "rate": 0.0, "planted": 0}
    if x < 2 or (k >= 2 and x > k):
        raise SeedingFault(f"seeding parameter x={x} outside 2..{k}")
    sigma = net.gamma
    p = seeding_rate(n, k, x, zeta)
    # every holder turns each held copy into one batch queue of targets
    queues: list[list[tuple[int, list[int]]]] = [[] for _ in range(n + 1)]
    for v in range(1, n + 1):
        if not state.care[v]:
            continue
        rng = net.stream_rng("seed-targets", v)
        for tid in state.care[v]:
            targets = [i + 1 for i in bernoulli_indices(rng, n, p) if i + 1 != v]
            if targets:
                queues[v].append((tid, targets))
    planted = sum(len(t) for q in queues for _, t in q)
    rounds = max(
        (sum(math.ceil(len(t) / sigma) for _, t in q) for q in queues),
        default=0,
    )
    for _ in range(rounds):
        msgs = []
        for v in range(1, n + 1):
            if not queues[v]:
                continue
            tid, targets = queues[v][0]
            batch, rest = targets[:sigma], targets[sigma:]
            if rest:
                queues[v][0] = (tid, rest)
            else:
                queues[v].pop(0)
            for u in batch:
                msgs.append(Message(v, u, "global", (tid,)))
        inboxes = net.run_round(msgs)
        for dst, ms in inboxes.items():
            for m in ms:
                tid = m.payload[0]
                state._learn(dst, tid)
                bit = np.uint64(1 << (tid & 63))
                if not (state.seeded[dst - 1, tid >> 6] & bit):
                    state.seeded[dst - 1, tid >> 6] |= bit
                    state.seeded_nodes[tid].append(dst)
    return {"rounds": rounds, "rate": p, "planted": planted}


def local_dissemination(
    net: HybridNetwork,
    state: TokenState,
    x: int,
    c_local: float = 2.0,
    scheduled: bool | None = None,
) -> dict:
    """Flood tokens over local edges until knowledge stabilizes.

    Every node floods each token it holds when the flood starts; a node
    that stayed silent about a token it already knows would absorb the
    wavefront and strand everything behind it.  With finite local
    capacity each token's flood starts at an independent uniform delay in
    [1, T], T = ceil(alpha * 2k / lam), and stops forwarding r rounds
    after its own start, r = ceil(c_local * x * ln n).  The ledger is
    charged for the rounds actually executed: flooding ends one quiet
    round after the last new learning (once every start delay has
    elapsed), and never runs past the analytic span T + r - 1.
    """
    net.set_phase("td.flood")
    n, k = state.n, state.k
    if k == 0:
        return {"rounds": 0, "window": 0, "dropped": 0}
    lam = net.cfg.lam
    if scheduled is None:
        scheduled = lam != INF
    if not scheduled and lam != INF:
        raise ValueError("unscheduled flooding requires unbounded local capacity")
    r_budget = max(1, math.ceil(c_local * x * math.log(n)))
    indptr, nbrs, wgts = net.g.csr()
    eu, ev, _ = net.g.edge_arrays()
    words = state.words

    if scheduled:
        window = net.delay_window(2 * k)
        rng = net.stream_rng("flood-delay")
        starts = [rng.randint(1, window) for _ in range(k)]
    else:
        window = 1
        starts = [1] * k
    total_span = window + r_budget - 1
    activate: dict[int, list[int]] = {}
    expire: dict[int, list[int]] = {}
    for tid, t0 in enumerate(starts):
        activate.setdefault(t0, []).append(tid)
        expire.setdefault(t0 + r_budget, []).append(tid)

    holders = state.known.copy()
    active_mask = np.zeros(words, dtype=np.uint64)
    newly = np.zeros((n, words), dtype=np.uint64)
    dropped_total = 0
    active_rounds = 0
    for rnd in range(1, total_span + 1):
        for tid in activate.get(rnd, ()):
            word, bit = tid >> 6, np.uint64(1 << (tid & 63))
            active_mask[word] |= bit
            newly[:, word] |= holders[:, word] & bit
        for tid in expire.get(rnd, ()):
            active_mask[tid >> 6] &= ~np.uint64(1 << (tid & 63))
        newly &= active_mask
        incoming, max_load, _ = K.flood_round(indptr, nbrs, eu, ev, state.known, newly)
        dropped = 0
        if lam != INF and max_load > lam:
            if net.cfg.strict:
                raise CapacityFault(
                    f"flood load {max_load} over local capacity {lam} "
                    f"in round {net.round_no}"
                )
            incoming, dropped = _drop_flood_overflow(
                state, indptr, nbrs, eu, ev, newly, int(lam)
            )
            max_load = int(lam)
        dropped_total += dropped
        net.charge_rounds(1, max_local=max_load, dropped=dropped)
        active_rounds += 1
        fresh = incoming & ~state.known
        state.known |= incoming
        newly = fresh
        if rnd >= window and not newly.any():
            # every start delay has elapsed and this round taught nobody
            # anything new, so no later round can either
            break
    return {
        "rounds": active_rounds,
        "span": total_span,
        "window": window,
        "dropped": dropped_total,
    }


def _drop_flood_overflow(state, indptr, nbrs, eu, ev, newly, lam):
    """Message-level adversary for flood rounds that exceed local capacity.

    On each overloaded edge only the lam lowest (token id, direction) sends
    survive.  Returns the corrected incoming bitsets and the drop count.
    """
    pc = K.popcount_rows(newly)
    loads = pc[eu] + pc[ev]
    over = np.nonzero(loads > lam)[0]
    dropped = 0
    # contributions removed per direction, keyed by (sender, receiver)
    removed: dict[tuple[int, int], np.ndarray] = {}
    for e in over:
        u, v = int(eu[e]), int(ev[e])
        sends = [(tid, u, v) for tid in _bits(newly[u])] + [
            (tid, v, u) for tid in _bits(newly[v])
        ]
        sends.sort(key=lambda t: (t[0], t[1]))
        for tid, a, b in sends[lam:]:
            mask = removed.setdefault((a, b), np.zeros(newly.shape[1], dtype=np.uint64))
            mask[tid >> 6] |= np.uint64(1 << (tid & 63))
            dropped += 1
    n = indptr.shape[0] - 1
    incoming = np.zeros_like(newly)
    for u in range(n):
        row = newly[u]
        if not row.any():
            continue
        for i in range(indptr[u], indptr[u + 1]):
            v = int(nbrs[i])
            cut = removed.get((u, v))
            if cut is None:
                incoming[v] |= row
            else:
                incoming[v] |= row & ~cut
    return incoming, dropped


def _bits(row: np.ndarray) -> list[int]:
    out = []
    for w, word in enumerate(row):
        word = int(word)
        while word:
            b = word & -word
            out.append((w << 6) + b.bit_length() - 1)
            word ^= b
    return out


@dataclass
class TDResult:
    state: TokenState
    x: int
    metrics: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.state.complete()


def default_spread(k: int) -> int:
    """Seeding parameter on the order of sqrt(k), clamped to the valid range."""
    return max(2, min(max(2, k), round(math.sqrt(k))))


def token_dissemination(
    net: HybridNetwork,
    initial: dict[int, list[Token]],
    x: int | None = None,
    c_local: float = 2.0,
    zeta: float = 4.0,
) -> TDResult:
    """Full pipeline: balance, multiply, seed, flood."""
    state = TokenState(net, initial)
    if state.complete():
        # zero tokens, or a single node already holding everything
        metrics = {
            "k": state.k,
            "rounds": 0,
            "complete": True,
            "multiply": {"skipped": True, "copies": state.k},
        }
        return TDResult(state=state, x=0, metrics=metrics)
    x = default_spread(state.k) if x is None else x
    before = net.round_no
    m_bal = token_balancing(net, state)
    m_mul = token_multiplication(net, state)
    m_seed = token_seeding(net, state, x, zeta=zeta)
    m_flood = local_dissemination(net, state, x, c_local=c_local)
    metrics = {
        "k": state.k,
        "ell_init": m_bal["ell_init"],
        "x": x,
        "rounds": net.round_no - before,
        "balance": m_bal,
        "multiply": m_mul,
        "seed": m_seed,
        "flood": m_flood,
        "complete": state.complete(),
    }
    return TDResult(state=state, x=x, metrics=metrics)
