"""Undirected weighted graphs, deterministic generators, and file I/O.

Nodes are labelled 1..n.  Weights are integers in [1, W] and W must stay
polynomial in n.  All randomness flows through ``random.Random`` instances
seeded from explicit strings, so every generator is bit-reproducible for a
fixed (family, n, seed) triple.
"""

from __future__ import annotations

import math
import random
from typing import Iterable, Iterator

import numpy as np

INF = math.inf


def derived_rng(*parts) -> random.Random:
    """Independent RNG stream keyed by the given parts (seed, labels, ids)."""
    return random.Random(":".join(str(p) for p in parts))


def bernoulli_indices(rng: random.Random, n: int, p: float) -> list[int]:
    """Indices 0..n-1 kept independently with probability p.

    Uses geometric gap sampling so the cost is proportional to the number of
    hits, not to n.  Draws are consumed in index order, so the result is
    deterministic for a given rng state.
    """
    if p <= 0.0 or n <= 0:
        return []
    if p >= 1.0:
        return list(range(n))
    out = []
    log_q = math.log1p(-p)
    i = -1
    while True:
        u = 1.0 - rng.random()
        i += 1 + int(math.log(u) / log_q)
        if i >= n:
            return out
        out.append(i)


class GraphError(ValueError):
    pass


class WeightedGraph:
    """Connected undirected graph with integer weights, no self-loops or
    parallel edges."""

    __slots__ = ("n", "W", "meta", "_adj", "_eu", "_ev", "_ew", "_csr")

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int, int]],
        W: int | None = None,
        poly_c: int = 4,
        validate: bool = True,
    ):
        self.n = int(n)
        self.meta: dict = {}
        adj: list[dict[int, int]] = [dict() for _ in range(self.n + 1)]
        canon: dict[tuple[int, int], int] = {}
        for u, v, w in edges:
            u, v, w = int(u), int(v), int(w)
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise GraphError(f"edge ({u},{v}) outside node range 1..{self.n}")
            key = (u, v) if u < v else (v, u)
            if key in canon:
                raise GraphError(f"parallel edge {key}")
            canon[key] = w
            adj[u][v] = w
            adj[v][u] = w
        self._adj = adj
        keys = sorted(canon)
        self._eu = np.array([k[0] - 1 for k in keys], dtype=np.intp)
        self._ev = np.array([k[1] - 1 for k in keys], dtype=np.intp)
        self._ew = np.array([canon[k] for k in keys], dtype=np.float64)
        wmax = int(self._ew.max()) if keys else 1
        self.W = int(W) if W is not None else wmax
        self._csr = None
        if validate:
            self._validate(wmax, poly_c)

    def _validate(self, wmax: int, poly_c: int) -> None:
        if self.n < 1:
            raise GraphError("need at least one node")
        if self.m:
            wmin = int(self._ew.min())
            if wmin < 1:
                raise GraphError(f"weight {wmin} below 1")
            if wmax > self.W:
                raise GraphError(f"weight {wmax} above declared W={self.W}")
        if self.W > max(2, self.n) ** poly_c:
            raise GraphError(f"W={self.W} exceeds n^{poly_c}")
        if self.n > 1:
            seen = [False] * (self.n + 1)
            stack = [1]
            seen[1] = True
            count = 1
            while stack:
                u = stack.pop()
                for v in self._adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        count += 1
                        stack.append(v)
            if count != self.n:
                raise GraphError(f"graph disconnected ({count}/{self.n} reachable)")

    @property
    def m(self) -> int:
        return self._eu.shape[0]

    def nodes(self) -> range:
        return range(1, self.n + 1)

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for u, v, w in zip(self._eu, self._ev, self._ew):
            yield int(u) + 1, int(v) + 1, int(w)

    def neighbors(self, u: int) -> list[int]:
        return sorted(self._adj[u])

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def weight(self, u: int, v: int) -> int:
        try:
            return self._adj[u][v]
        except KeyError:
            raise GraphError(f"no edge ({u},{v})") from None

    def csr(self):
        """(indptr, nbrs, wgts) over 0-based nodes, neighbours sorted."""
        if self._csr is None:
            n = self.n
            indptr = np.zeros(n + 1, dtype=np.intp)
            for u in range(1, n + 1):
                indptr[u] = indptr[u - 1] + len(self._adj[u])
            nbrs = np.empty(indptr[-1], dtype=np.intp)
            wgts = np.empty(indptr[-1], dtype=np.float64)
            pos = 0
            for u in range(1, n + 1):
                for v in sorted(self._adj[u]):
                    nbrs[pos] = v - 1
                    wgts[pos] = self._adj[u][v]
                    pos += 1
            self._csr = (indptr, nbrs, wgts)
        return self._csr

    def edge_arrays(self):
        """(eu, ev, ew) with eu < ev, 0-based, sorted lexicographically."""
        return self._eu, self._ev, self._ew

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {
            (int(u) + 1, int(v) + 1): i
            for i, (u, v) in enumerate(zip(self._eu, self._ev))
        }

    def induced(self, keep: set[int]) -> "WeightedGraph":
        """Subgraph on ``keep`` with original labels, skipping validation
        (the result may be disconnected)."""
        edges = [
            (u, v, w)
            for u, v, w in self.edges()
            if u in keep and v in keep
        ]
        g = WeightedGraph(self.n, edges, W=self.W, validate=False)
        g.meta["active"] = set(keep)
        return g


# ---------------------------------------------------------------------------
# generators


def _path_edges(n: int, wfun) -> list[tuple[int, int, int]]:
    return [(i, i + 1, wfun()) for i in range(1, n)]


def gen_graph(
    family: str,
    n: int,
    seed: int,
    weight_mode: str = "unit",
    W: int | None = None,
) -> WeightedGraph:
    """Deterministic graph generator.

    Families: path, cycle, star, grid, random_connected, lb_apsp_gadget.
    weight_mode "unit" gives all weights 1; "uniform" draws integers from
    [1, W] (W defaults to n).
    """
    if weight_mode == "unit":
        wmax = 1

        def wfun():
            return 1

    elif weight_mode == "uniform":
        wmax = int(W) if W is not None else n
        if wmax < 1:
            raise GraphError("W must be >= 1")
        wrng = derived_rng(seed, family, n, "weights")

        def wfun():
            return wrng.randint(1, wmax)

    else:
        raise GraphError(f"unknown weight_mode {weight_mode!r}")

    meta: dict = {"family": family, "n": n, "seed": seed}

    if family == "path":
        if n < 2:
            raise GraphError("path needs n >= 2")
        edges = _path_edges(n, wfun)
    elif family == "cycle":
        if n < 3:
            raise GraphError("cycle needs n >= 3")
        edges = _path_edges(n, wfun)
        edges.append((n, 1, wfun()))
    elif family == "star":
        if n < 2:
            raise GraphError("star needs n >= 2")
        edges = [(1, v, wfun()) for v in range(2, n + 1)]
    elif family == "grid":
        if n < 4:
            raise GraphError("grid needs n >= 4")
        rows = math.isqrt(n)
        cols = -(-n // rows)
        meta["rows"], meta["cols"] = rows, cols
        edges = []
        for idx in range(1, n + 1):
            r, c = divmod(idx - 1, cols)
            if c + 1 < cols and idx + 1 <= n:
                edges.append((idx, idx + 1, wfun()))
            if idx + cols <= n:
                edges.append((idx, idx + cols, wfun()))
    elif family == "random_connected":
        if n < 2:
            raise GraphError("random_connected needs n >= 2")
        rng = derived_rng(seed, family, n, "topology")
        present = set()
        for v in range(2, n + 1):
            present.add((rng.randint(1, v - 1), v))
        p = min(1.0, (math.log(n) + 3.0) / n)
        for u in range(1, n):
            for off in bernoulli_indices(rng, n - u, p):
                v = u + 1 + off
                if (u, v) not in present:
                    present.add((u, v))
        edges = [(u, v, wfun()) for u, v in sorted(present)]
    elif family == "lb_apsp_gadget":
        if n < 8:
            raise GraphError("lb_apsp_gadget needs n >= 8")
        hop_gap = max(1, math.isqrt(n) // max(1, int(math.log2(n))))
        x = n // 2 + hop_gap
        y = (n - x) // 2
        if y < 1:
            raise GraphError("lb_apsp_gadget needs room for side sets")
        edges = _path_edges(x, wfun)
        base, near, far = 1, 1 + hop_gap, x
        rng = derived_rng(seed, family, n, "sides")
        s_near: list[int] = []
        s_far: list[int] = []
        extras = list(range(x + 1, x + 2 * y + 1))
        for i, u in enumerate(extras):
            if i < y:
                (s_near if rng.random() < 0.5 else s_far).append(u)
            else:
                # the fill half tops the short side up first
                (s_near if len(s_near) < y else s_far).append(u)
        assert len(s_near) == y and len(s_far) == y
        for u in s_near:
            edges.append((near, u, wfun()))
        for u in s_far:
            edges.append((far, u, wfun()))
        for pad in range(x + 2 * y + 1, n + 1):
            edges.append((base, pad, wfun()))
        meta.update(
            base=base, near=near, far=far, hop_gap=hop_gap,
            side_near=sorted(s_near), side_far=sorted(s_far),
        )
    else:
        raise GraphError(f"unknown family {family!r}")

    g = WeightedGraph(n, edges, W=wmax)
    g.meta.update(meta)
    return g


# ---------------------------------------------------------------------------
# file format: header "n m W", then m lines "u v w"


def write_graph(g: WeightedGraph, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{g.n} {g.m} {g.W}\n")
        for u, v, w in g.edges():
            fh.write(f"{u} {v} {w}\n")


def read_graph(path: str) -> WeightedGraph:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise GraphError("header must be 'n m W'")
        n, m, w_decl = (int(t) for t in header)
        edges = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise GraphError(f"bad edge line {line!r}")
            edges.append(tuple(int(t) for t in parts))
        if len(edges) != m:
            raise GraphError(f"declared {m} edges, file has {len(edges)}")
    return WeightedGraph(n, edges, W=w_decl)
