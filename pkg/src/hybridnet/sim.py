"""Synchronous round engine for the hybrid network model.

A round moves messages over two channels.  Local messages travel along
edges of the fixed graph, at most ``lam`` per edge per round.  Global
messages travel between arbitrary node pairs, at most ``gamma`` sends per
node per round.  Excess traffic is removed by a deterministic adversary
that drops highest sequence numbers first.

Send capacity is enforced.  Receive counts on the global channel are
always measured and reported, and can additionally be enforced by setting
``gamma_recv``; the algorithms in this package bound their send sides
tightly while receive peaks are larger by a logarithmic factor, so the
default leaves the receive side unenforced and visible in the ledger.

Aggregation and convergecast are idealized primitives: they do not move
per-message traffic but charge an explicit logarithmic number of rounds,
stretched if needed so the recorded per-round load stays within gamma.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .graphs import INF, WeightedGraph, derived_rng


class CapacityFault(RuntimeError):
    """Raised in strict mode where the permissive mode would drop traffic."""


class AggregationFault(ValueError):
    """Raised when aggregation concurrency preconditions are violated."""


@dataclass
class HybridConfig:
    lam: float = INF
    gamma: int | None = None
    gamma_recv: int | None = None
    seed: int = 0
    message_field_budget: int = 3
    c_agg: float = 1.0
    alpha_delay: float = 3.0
    strict: bool = False

    def __post_init__(self):
        if self.lam != INF:
            self.lam = int(self.lam)
            if self.lam < 1:
                raise ValueError("lam must be >= 1")
        if self.gamma is not None and self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if self.alpha_delay < 3.0:
            raise ValueError("alpha_delay must be >= 3")


@dataclass(frozen=True)
class Message:
    src: int
    dst: int
    channel: str  # "local" or "global"
    payload: tuple


@dataclass
class RoundEntry:
    first_round: int
    rounds: int
    max_local_per_edge: int
    max_global_send: int
    max_global_recv: int
    dropped: int
    phase_label: str


class RoundLedger:
    """Per-round capacity usage, exportable as CSV."""

    def __init__(self):
        self.entries: list[RoundEntry] = []

    def add(self, entry: RoundEntry) -> None:
        self.entries.append(entry)

    @property
    def rounds_total(self) -> int:
        return sum(e.rounds for e in self.entries)

    def max_local(self) -> int:
        return max((e.max_local_per_edge for e in self.entries), default=0)

    def max_global_send(self) -> int:
        return max((e.max_global_send for e in self.entries), default=0)

    def max_global_recv(self) -> int:
        return max((e.max_global_recv for e in self.entries), default=0)

    def dropped_total(self) -> int:
        return sum(e.dropped for e in self.entries)

    def phase_rounds(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            out[e.phase_label] = out.get(e.phase_label, 0) + e.rounds
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(
            ["round", "max_local_per_edge", "max_global_per_node", "dropped", "phase_label"]
        )
        for e in self.entries:
            per_node = max(e.max_global_send, e.max_global_recv)
            for r in range(e.first_round, e.first_round + e.rounds):
                # drops happened in the block's first round unless uniform
                d = e.dropped if e.rounds == 1 or r == e.first_round else 0
                wr.writerow([r, e.max_local_per_edge, per_node, d, e.phase_label])
        return buf.getvalue()

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_csv())


def default_gamma(n: int) -> int:
    return max(1, math.ceil(math.log2(max(2, n))))


class HybridNetwork:
    """Round-by-round executor bound to one graph and one config."""

    def __init__(self, graph: WeightedGraph, config: HybridConfig | None = None):
        self.g = graph
        self.cfg = config or HybridConfig()
        self.gamma = self.cfg.gamma if self.cfg.gamma is not None else default_gamma(graph.n)
        self.ledger = RoundLedger()
        self.round_no = 1
        self.phase = "init"
        self._adj = {u: set(graph.neighbors(u)) for u in graph.nodes()}

    # -- randomness ---------------------------------------------------------

    def node_rng(self, node: int):
        """Private stream for one node in the current round."""
        return derived_rng(self.cfg.seed, node, self.round_no)

    def stream_rng(self, *salt):
        """Named stream independent of the round counter."""
        return derived_rng(self.cfg.seed, *salt)

    # -- bookkeeping --------------------------------------------------------

    def set_phase(self, label: str) -> None:
        self.phase = label

    def charge_rounds(
        self,
        rounds: int,
        max_local: int = 0,
        max_global_send: int = 0,
        max_global_recv: int = 0,
        dropped: int = 0,
    ) -> None:
        """Account for rounds executed in bulk (analytic load bounds)."""
        if rounds <= 0:
            return
        self.ledger.add(
            RoundEntry(
                first_round=self.round_no,
                rounds=rounds,
                max_local_per_edge=int(max_local),
                max_global_send=int(max_global_send),
                max_global_recv=int(max_global_recv),
                dropped=int(dropped),
                phase_label=self.phase,
            )
        )
        self.round_no += rounds

    # -- message delivery ---------------------------------------------------

    def _validate(self, msg: Message) -> None:
        n = self.g.n
        if not (1 <= msg.src <= n and 1 <= msg.dst <= n):
            raise ValueError(f"endpoint outside 1..{n}: {msg}")
        if not isinstance(msg.payload, tuple):
            raise ValueError(f"payload must be a tuple: {msg}")
        if len(msg.payload) > self.cfg.message_field_budget:
            raise ValueError(
                f"payload has {len(msg.payload)} fields, budget is "
                f"{self.cfg.message_field_budget}"
            )
        if msg.channel == "local":
            if msg.dst not in self._adj[msg.src]:
                raise ValueError(f"local message without edge: {msg}")
        elif msg.channel == "global":
            if msg.src == msg.dst:
                raise ValueError(f"global self-message: {msg}")
        else:
            raise ValueError(f"unknown channel {msg.channel!r}")

    def run_round(self, messages: list[Message]) -> dict[int, list[Message]]:
        """Deliver one round of traffic and append a ledger entry.

        Messages are sequenced in list order; when capacity is exceeded the
        adversary drops the highest sequence numbers.  In strict mode any
        would-be drop raises CapacityFault instead.  Returns the inboxes of
        delivered messages keyed by destination.
        """
        lam = self.cfg.lam
        local_per_edge: dict[tuple[int, int], int] = {}
        send_per_node: dict[int, int] = {}
        recv_per_node: dict[int, int] = {}
        delivered: dict[int, list[Message]] = {}
        dropped = 0

        for seq, msg in enumerate(messages):
            self._validate(msg)
            if msg.channel == "local":
                key = (msg.src, msg.dst) if msg.src < msg.dst else (msg.dst, msg.src)
                used = local_per_edge.get(key, 0)
                if used + 1 > lam:
                    if self.cfg.strict:
                        raise CapacityFault(
                            f"edge {key} over local capacity {lam} in round {self.round_no}"
                        )
                    dropped += 1
                    continue
                local_per_edge[key] = used + 1
            else:
                used = send_per_node.get(msg.src, 0)
                if used + 1 > self.gamma:
                    if self.cfg.strict:
                        raise CapacityFault(
                            f"node {msg.src} over global send capacity "
                            f"{self.gamma} in round {self.round_no}"
                        )
                    dropped += 1
                    continue
                if self.cfg.gamma_recv is not None:
                    rused = recv_per_node.get(msg.dst, 0)
                    if rused + 1 > self.cfg.gamma_recv:
                        if self.cfg.strict:
                            raise CapacityFault(
                                f"node {msg.dst} over global receive capacity "
                                f"{self.cfg.gamma_recv} in round {self.round_no}"
                            )
                        dropped += 1
                        continue
                send_per_node[msg.src] = used + 1
                recv_per_node[msg.dst] = recv_per_node.get(msg.dst, 0) + 1
            delivered.setdefault(msg.dst, []).append(msg)

        self.ledger.add(
            RoundEntry(
                first_round=self.round_no,
                rounds=1,
                max_local_per_edge=max(local_per_edge.values(), default=0),
                max_global_send=max(send_per_node.values(), default=0),
                max_global_recv=max(recv_per_node.values(), default=0),
                dropped=dropped,
                phase_label=self.phase,
            )
        )
        self.round_no += 1
        return delivered

    # -- idealized primitives -----------------------------------------------

    def aggregation_rounds(self) -> int:
        """Round cost of one aggregation or convergecast window."""
        return max(1, math.ceil(self.cfg.c_agg * math.log2(max(2, self.g.n))))

    def aggregate_min(
        self,
        groups: list[tuple[list[tuple[int, int | float, float]], int]],
        max_groups_per_target: int = 1,
        lanes: int = 1,
    ) -> list[tuple[float, int | float]]:
        """Concurrent minimum aggregations.

        Each group is (contributions, target) with contributions a list of
        (node, key, value).  The target learns (min value, its key); ties go
        to the smallest key.  Results come back as one (value, key) per
        group, in group order.  A node may contribute to at most
        lanes * (ceil(log2 n) + 1) groups and be the target of at most
        max_groups_per_target; multi-source algorithms run several
        independent lanes at once and lift both caps.  The batch charges
        ceil(c_agg * log2 n) rounds, stretched if concurrency would push the
        per-round global load above gamma.
        """
        if not groups:
            return []
        member_count: dict[int, int] = {}
        target_count: dict[int, int] = {}
        cap = lanes * (math.ceil(math.log2(max(2, self.g.n))) + 1)
        results: list[tuple[float, int | float]] = []
        for contributions, target in groups:
            if not contributions:
                raise AggregationFault("empty aggregation group")
            target_count[target] = target_count.get(target, 0) + 1
            if target_count[target] > max_groups_per_target:
                raise AggregationFault(f"node {target} is target of too many groups")
            best = None
            for node, key, value in contributions:
                member_count[node] = member_count.get(node, 0) + 1
                if member_count[node] > cap:
                    raise AggregationFault(
                        f"node {node} participates in more than {cap} groups"
                    )
                if best is None or (value, key) < best:
                    best = (value, key)
            results.append(best)
        base = self.aggregation_rounds()
        peak = max(member_count.values())
        stretch = max(1, math.ceil(peak / self.gamma))
        per_round = math.ceil(peak / stretch)
        self.charge_rounds(
            base * stretch,
            max_global_send=per_round,
            max_global_recv=per_round,
        )
        return results

    def convergecast_and(self, flags: dict[int, bool]) -> bool:
        """AND over the flags of the participating nodes, with the same round
        charge as one aggregation batch."""
        if not flags:
            raise AggregationFault("convergecast needs at least one participant")
        self.charge_rounds(
            self.aggregation_rounds(), max_global_send=1, max_global_recv=1
        )
        return all(flags.values())

    # -- random-delay scheduling --------------------------------------------

    def delay_window(self, cumulative_per_edge: float) -> int:
        """Length of the start-time window [1, T] for job delays."""
        if self.cfg.lam == INF:
            return 1
        return max(1, math.ceil(self.cfg.alpha_delay * cumulative_per_edge / self.cfg.lam))

    def schedule_with_random_delays(
        self,
        jobs: list[list[dict[tuple[int, int], int]]],
        cumulative_per_edge: float,
        simple_budget: int = 2,
        salt: str = "delay",
    ) -> "SchedulePlan":
        """Run jobs concurrently with uniformly random start offsets.

        Each job is a list of its own rounds, each round a mapping from
        canonical edge (u, v) to message count.  Offsets are drawn from
        [1, T] with T = ceil(alpha * C / lam) where C bounds the cumulative
        per-edge traffic of the whole batch.  In strict mode a job using
        more than ``simple_budget`` messages on one edge in one of its own
        rounds faults, as does any combined per-edge overload.
        """
        rng = self.stream_rng(salt)
        T = self.delay_window(cumulative_per_edge)
        starts = [rng.randint(1, T) for _ in jobs]
        duration = max((len(j) for j in jobs), default=0)
        length = (max(starts) if starts else 1) + duration - 1 if jobs else 0
        loads: list[dict[tuple[int, int], int]] = [dict() for _ in range(length + 1)]
        for job, t0 in zip(jobs, starts):
            for off, round_loads in enumerate(job):
                for edge, cnt in round_loads.items():
                    if cnt > simple_budget and self.cfg.strict:
                        raise CapacityFault(
                            f"job exceeds per-edge budget {simple_budget} on {edge}"
                        )
                    slot = loads[t0 + off - 1]
                    slot[edge] = slot.get(edge, 0) + cnt
        lam = self.cfg.lam
        overloads = 0
        for r, slot in enumerate(loads[:length]):
            peak = max(slot.values(), default=0)
            excess = sum(max(0, c - lam) for c in slot.values()) if lam != INF else 0
            if excess and self.cfg.strict:
                raise CapacityFault(f"scheduled load {peak} over lam {lam}")
            overloads += int(excess)
            self.charge_rounds(1, max_local=peak, dropped=int(excess))
        return SchedulePlan(
            starts=starts, window=T, length=length, overload_msgs=overloads
        )


@dataclass
class SchedulePlan:
    starts: list[int]
    window: int
    length: int
    overload_msgs: int
    meta: dict = field(default_factory=dict)
