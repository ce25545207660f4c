"""Experiment harness: sweep runner and scaling-exponent fitter.

The ``hybridnet`` console script has two subcommands.  ``run`` executes one
algorithm over a grid of sizes and seeds, validates every run against a
fresh oracle, and writes a byte-stable CSV.  ``fit`` reads such a CSV back
and estimates how the round count grows with problem size.

Config files are plain ``key = value`` lines mirroring the flag names;
flags given on the command line win over file values.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import statistics
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .apsp import approx_apsp, exact_apsp
from .graphs import (
    INF,
    GraphError,
    WeightedGraph,
    bernoulli_indices,
    derived_rng,
    gen_graph,
)
from .oracles import (
    all_pairs_dijkstra,
    dijkstra,
    hop_limited_matrix,
    shortest_path_diameter,
)
from .sim import HybridConfig, HybridNetwork, default_gamma
from .spanner import build_skeleton_spanner, recursive_sssp
from .sssp_bcc import approx_sssp_bcc
from .sssp_exact import exact_sssp, hk_ssp
from .tokens import Token, token_dissemination

ALGOS = (
    "td",
    "apsp_exact",
    "apsp_3",
    "apsp_eps",
    "sssp_exact",
    "sssp_bcc",
    "sssp_recursive",
    "hk_ssp",
    "spanner_only",
)

FAMILIES = ("path", "cycle", "grid", "star", "random_connected", "lb_apsp_gadget")

# Tolerance for ratio checks only; distance values themselves are integer
# sums held exactly in float64, so equality checks stay exact.
RATIO_EPS = 1e-9

CSV_SCHEMA = "hybridnet-run-v1"

CSV_FIELDS = (
    "schema",
    "algo",
    "family",
    "n",
    "seed",
    "x",
    "rounds_total",
    "rounds_by_phase",
    "max_local_per_edge",
    "max_global_per_node",
    "dropped",
    "correctness",
    "value",
    "ok",
)


class HarnessError(ValueError):
    """Bad experiment configuration or unusable input file."""


@dataclass
class ExperimentConfig:
    """One sweep: a single algorithm over (n, seed) pairs."""

    algo: str
    family: str = "random_connected"
    n_list: tuple[int, ...] = ()
    seeds: tuple[int, ...] = ()
    lam: float = INF
    gamma: int | None = None
    eps: float | None = None
    alpha: float | None = None
    x: float | None = None
    strict: bool = False
    out: str | None = None
    weights: str | None = None
    wmax: int | None = None
    xi: float | None = None
    c_agg: float = 1.0

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise HarnessError(f"unknown algo {self.algo!r}")
        if self.family not in FAMILIES:
            raise HarnessError(f"unknown family {self.family!r}")
        self.n_list = tuple(int(n) for n in self.n_list)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.n_list:
            raise HarnessError("n_list must be nonempty")
        if not self.seeds:
            raise HarnessError("seeds must be nonempty")
        if any(n < 2 for n in self.n_list):
            raise HarnessError("all n must be >= 2")
        if self.lam != INF and self.lam < 1:
            raise HarnessError("lambda must be >= 1 or inf")
        if self.eps is not None and not 0 < self.eps <= 1:
            raise HarnessError("eps must be in (0, 1]")
        if self.alpha is not None and self.alpha < 5:
            raise HarnessError("alpha must be >= 5")
        if self.weights not in (None, "unit", "uniform"):
            raise HarnessError(f"unknown weights mode {self.weights!r}")
        if self.algo == "apsp_eps" and self.weights == "uniform":
            raise HarnessError("apsp_eps runs on unit weights only")

    def weight_profile(self) -> tuple[str, int | None]:
        """Weight mode and cap actually used for graph generation."""
        if self.weights is not None:
            return self.weights, (self.wmax if self.weights == "uniform" else None)
        if self.algo in ("td", "apsp_eps"):
            return "unit", None
        return "uniform", (self.wmax if self.wmax is not None else 8)


@dataclass
class RunRecord:
    """Outcome of one (algo, n, seed) execution.

    ``wall_s`` is reported on stdout only; the CSV must be byte-identical
    across reruns, so timing never lands in the file.
    """

    algo: str
    family: str
    n: int
    seed: int
    x: str
    rounds_total: int
    rounds_by_phase: str
    max_local_per_edge: int
    max_global_per_node: int
    dropped: int
    correctness: str
    value: str
    ok: bool
    wall_s: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_row(self) -> list[str]:
        return [
            CSV_SCHEMA,
            self.algo,
            self.family,
            str(self.n),
            str(self.seed),
            self.x,
            str(self.rounds_total),
            self.rounds_by_phase,
            str(self.max_local_per_edge),
            str(self.max_global_per_node),
            str(self.dropped),
            self.correctness,
            self.value,
            "1" if self.ok else "0",
        ]


def _fmt_ratio(v: float) -> str:
    return f"{v:.6f}"


def _fmt_x(v) -> str:
    if v in ("", None):
        return ""
    f = float(v)
    return str(int(f)) if f == int(f) else f"{f:g}"


def _phase_summary(net: HybridNetwork) -> str:
    items = sorted(net.ledger.phase_rounds().items())
    return ";".join(f"{label}={rounds}" for label, rounds in items)


def _net_columns(net: HybridNetwork) -> dict:
    led = net.ledger
    return {
        "rounds_total": led.rounds_total,
        "rounds_by_phase": _phase_summary(net),
        "max_local_per_edge": led.max_local(),
        "max_global_per_node": max(led.max_global_send(), led.max_global_recv()),
        "dropped": led.dropped_total(),
    }


def capacity_profile(
    algo: str,
    n: int,
    tokens: int | None = None,
    eps: float | None = None,
    spd: int | None = None,
) -> int:
    """Per-edge local budget matching each algorithm's declared message load.

    These are the loads the algorithms are analyzed against: running with
    this lambda in permissive mode is expected to drop nothing.
    """
    log_n = max(1, math.ceil(math.log2(n)))
    if algo == "td":
        k = tokens if tokens is not None else n
        return max(1, math.ceil(math.sqrt(k))) * log_n
    if algo in ("apsp_exact", "apsp_3", "apsp_eps"):
        return 2 * n
    if algo in ("sssp_exact", "hk_ssp"):
        h = spd if spd is not None else n
        return max(1, math.ceil(n * n / math.sqrt(max(1, h))))
    if algo == "sssp_bcc":
        e = eps if eps is not None else 0.5
        return max(1, math.ceil(n ** (2.0 / 3.0) * e**6)) * log_n * log_n
    if algo in ("sssp_recursive", "spanner_only"):
        return 4
    raise HarnessError(f"unknown algo {algo!r}")


# -- per-algorithm runners ----------------------------------------------------


def _hybrid_config(cfg: ExperimentConfig, seed: int) -> HybridConfig:
    return HybridConfig(
        lam=cfg.lam,
        gamma=cfg.gamma,
        seed=seed,
        strict=cfg.strict,
        c_agg=cfg.c_agg,
    )


def _source_node(algo: str, n: int, seed: int) -> int:
    return derived_rng("cli-source", algo, n, seed).randint(1, n)


def _matrix_ratio(approx: np.ndarray, exact: np.ndarray) -> tuple[bool, float]:
    """Lower-bound check and worst pairwise ratio over comparable pairs."""
    finite = np.isfinite(exact)
    same_support = bool(np.array_equal(finite, np.isfinite(approx)))
    lower_ok = same_support and bool(np.all(approx[finite] >= exact[finite] - RATIO_EPS))
    pos = finite & (exact > 0)
    if not pos.any():
        return lower_ok, 1.0
    ratio = float(np.max(approx[pos] / exact[pos]))
    return lower_ok, ratio


def _run_td(cfg: ExperimentConfig, g: WeightedGraph, seed: int) -> tuple[dict, dict]:
    n = g.n
    k = int(cfg.x) if cfg.x is not None else n
    if k < 1:
        raise HarnessError("td needs x >= 1 tokens")
    rng = derived_rng("cli-tokens", n, seed)
    initial: dict[int, list[Token]] = {}
    for i in range(k):
        holder = rng.randint(1, n)
        initial.setdefault(holder, []).append(Token(payload=("tok", i)))
    net = HybridNetwork(g, _hybrid_config(cfg, seed))
    res = token_dissemination(net, initial)
    complete = bool(res.metrics["complete"])
    copies = int(res.metrics["multiply"].get("copies", k))
    expected = k * 2 ** max(0, math.floor(math.log2(n / k))) if k <= n else k
    ok = complete and copies == expected
    out = {
        "net": net,
        "x": str(k),
        "correctness": "exact_match",
        "value": "1" if complete else "0",
        "ok": ok,
    }
    return out, {"copies": copies, "expected_copies": expected, "metrics": res.metrics}


def _run_apsp(cfg: ExperimentConfig, g: WeightedGraph, seed: int) -> tuple[dict, dict]:
    hcfg = _hybrid_config(cfg, seed)
    xi = cfg.xi if cfg.xi is not None else 8.0
    if cfg.algo == "apsp_exact":
        res = exact_apsp(g, cfg=hcfg, x=cfg.x, xi=xi)
    elif cfg.algo == "apsp_3":
        res = approx_apsp(g, cfg=hcfg, mode="approx3", x=cfg.x, xi=xi)
    else:
        eps = cfg.eps if cfg.eps is not None else 0.5
        res = approx_apsp(g, cfg=hcfg, mode="eps", eps=eps, x=cfg.x, xi=xi)
    oracle = all_pairs_dijkstra(g)
    x_used = _fmt_x(res.metrics.get("x", ""))
    if cfg.algo == "apsp_exact":
        exact = bool(np.array_equal(res.dmat.data, oracle.data))
        out = {
            "net": res.net,
            "x": x_used,
            "correctness": "exact_match",
            "value": "1" if exact else "0",
            "ok": exact,
        }
        return out, {}
    lower_ok, ratio = _matrix_ratio(res.dmat.data, oracle.data)
    bound = 3.0 if cfg.algo == "apsp_3" else 1.0 + (cfg.eps if cfg.eps is not None else 0.5)
    ok = lower_ok and ratio <= bound + RATIO_EPS
    out = {
        "net": res.net,
        "x": x_used,
        "correctness": "max_ratio",
        "value": _fmt_ratio(ratio),
        "ok": ok,
    }
    return out, {"lower_ok": lower_ok, "ratio": ratio, "bound": bound}


def _run_sssp_exact(cfg: ExperimentConfig, g: WeightedGraph, seed: int) -> tuple[dict, dict]:
    src = _source_node(cfg.algo, g.n, seed)
    res = exact_sssp(g, src, _hybrid_config(cfg, seed))
    truth = dijkstra(g, src).dist
    got = {v: d for v, d in res.dist.items() if d != INF}
    exact = got == truth
    out = {
        "net": res.net,
        "x": "",
        "correctness": "exact_match",
        "value": "1" if exact else "0",
        "ok": exact,
    }
    return out, {"source": src, "phases": res.phases}


def _run_sssp_bcc(cfg: ExperimentConfig, g: WeightedGraph, seed: int) -> tuple[dict, dict]:
    src = _source_node(cfg.algo, g.n, seed)
    eps = cfg.eps if cfg.eps is not None else 0.5
    res = approx_sssp_bcc(g, src, eps, cfg=_hybrid_config(cfg, seed), x=cfg.x)
    truth = dijkstra(g, src).dist
    approx = res.dmap.dist
    covered = set(truth) <= set(approx)
    lower_ok = covered and all(approx[v] >= truth[v] - RATIO_EPS for v in truth)
    ratios = [approx[v] / truth[v] for v in truth if v != src and truth[v] > 0]
    ratio = max(ratios, default=1.0)
    ok = lower_ok and ratio <= 1.0 + eps + RATIO_EPS
    out = {
        "net": res.net,
        "x": _fmt_x(res.metrics.get("x", "")),
        "correctness": "max_ratio",
        "value": _fmt_ratio(ratio),
        "ok": ok,
    }
    return out, {"source": src, "lower_ok": lower_ok, "ratio": ratio}


def _run_sssp_recursive(cfg: ExperimentConfig, g: WeightedGraph, seed: int) -> tuple[dict, dict]:
    src = _source_node(cfg.algo, g.n, seed)
    alpha = cfg.alpha if cfg.alpha is not None else 8.0
    res = recursive_sssp(g, src, alpha, cfg=_hybrid_config(cfg, seed))
    truth = dijkstra(g, src).dist
    approx = res.dist.dist
    finite_all = set(truth) <= set(approx)
    lower_ok = finite_all and all(approx[v] >= truth[v] - RATIO_EPS for v in truth)
    ratios = [approx[v] / truth[v] for v in truth if v != src and truth[v] > 0]
    ratio = max(ratios, default=1.0)
    budget = float(res.metrics["stretch_budget"])
    ok = finite_all and lower_ok and ratio <= budget + RATIO_EPS
    out = {
        "net": res.net,
        "x": "",
        "correctness": "max_ratio",
        "value": _fmt_ratio(ratio),
        "ok": ok,
    }
    detail = {
        "source": src,
        "ratio": ratio,
        "budget": budget,
        "levels": res.metrics["levels"],
        "finite_all": finite_all,
        "lower_ok": lower_ok,
    }
    return out, detail


def _run_hk_ssp(cfg: ExperimentConfig, g: WeightedGraph, seed: int) -> tuple[dict, dict]:
    n = g.n
    h = int(cfg.x) if cfg.x is not None else max(2, math.ceil(math.sqrt(n)))
    if h < 1:
        raise HarnessError("hk_ssp needs x >= 1 hops")
    count = min(n, max(1, math.ceil(math.sqrt(n))))
    rng = derived_rng("cli-sources", n, seed)
    sources = sorted(rng.sample(range(1, n + 1), count))
    res = hk_ssp(g, sources, h, _hybrid_config(cfg, seed))
    capped = hop_limited_matrix(g, sources, h)
    ok = True
    for idx, s in enumerate(sources):
        truth = dijkstra(g, s).dist
        row = capped[idx]
        for v in range(1, n + 1):
            upper = float(row[v - 1])
            if math.isinf(upper):
                continue
            d = res.dist.get(v, {}).get(s)
            if d is None or d < truth.get(v, INF) - RATIO_EPS or d > upper + RATIO_EPS:
                ok = False
                break
        if not ok:
            break
    out = {
        "net": res.net,
        "x": str(h),
        "correctness": "exact_match",
        "value": "1" if ok else "0",
        "ok": ok,
    }
    return out, {"sources": sources, "h": h}


def _two_hop_closure(mat: np.ndarray) -> np.ndarray:
    """Best distance using at most two edges of the given adjacency matrix."""
    with np.errstate(invalid="ignore"):
        via = (mat[:, :, None] + mat[None, :, :]).min(axis=1)
    return np.minimum(mat, via)


def _run_spanner_only(cfg: ExperimentConfig, g: WeightedGraph, seed: int) -> tuple[dict, dict]:
    n = g.n
    target = float(cfg.x) if cfg.x is not None else max(2.0, round(math.sqrt(n)))
    if target < 1:
        raise HarnessError("spanner_only needs x >= 1 marked nodes")
    p = min(1.0, target / n)
    marked = [i + 1 for i in bernoulli_indices(derived_rng("cli-mark", n, seed), n, p)]
    if len(marked) < 2:
        marked = [1, 2]
    h = 8
    k = 3
    eta = 2.0
    net = HybridNetwork(g, _hybrid_config(cfg, seed))
    sp = build_skeleton_spanner(g, marked, h=h, k=k, eta=eta, net=net)

    adj = {u: dict(g._adj[u]) for u in g.nodes()}
    witness_ok = True
    for (u, v), w in sp.edges.items():
        path = sp.witness[(u, v)]
        total = 0.0
        good = path[0] == u and path[-1] == v
        for a, b in zip(path, path[1:]):
            step = adj[a].get(b)
            if step is None:
                good = False
                break
            total += step
        if not good or total != w:
            witness_ok = False
            break

    m = len(marked)
    wmax = sp.W
    size_bound = 8 * k * (m ** (1 + 1 / k)) * math.log(n) * max(1.0, math.log(wmax) / math.log(eta))
    size_ok = len(sp.edges) <= size_bound

    idx = {u: i for i, u in enumerate(marked)}
    hmat = np.full((m, m), np.inf)
    np.fill_diagonal(hmat, 0.0)
    for (u, v), w in sp.edges.items():
        i, j = idx[u], idx[v]
        if w < hmat[i, j]:
            hmat[i, j] = hmat[j, i] = float(w)
    two_hop = _two_hop_closure(hmat)
    capped = hop_limited_matrix(g, marked, h)
    stretch_ok = True
    worst = 1.0
    for i in range(m):
        for j in range(i + 1, m):
            d_h = float(capped[i][marked[j] - 1])
            if math.isinf(d_h) or d_h <= 0:
                continue
            got = float(two_hop[i, j])
            if math.isinf(got) or got > 2 * eta * k * d_h + RATIO_EPS:
                stretch_ok = False
            if math.isfinite(got):
                worst = max(worst, got / d_h)
    ok = witness_ok and size_ok and stretch_ok
    out = {
        "net": net,
        "x": str(len(marked)),
        "correctness": "max_ratio",
        "value": _fmt_ratio(worst),
        "ok": ok,
    }
    detail = {
        "marked": len(marked),
        "edges": len(sp.edges),
        "size_bound": size_bound,
        "witness_ok": witness_ok,
        "size_ok": size_ok,
        "stretch_ok": stretch_ok,
    }
    return out, detail


_RUNNERS = {
    "td": _run_td,
    "apsp_exact": _run_apsp,
    "apsp_3": _run_apsp,
    "apsp_eps": _run_apsp,
    "sssp_exact": _run_sssp_exact,
    "sssp_bcc": _run_sssp_bcc,
    "sssp_recursive": _run_sssp_recursive,
    "hk_ssp": _run_hk_ssp,
    "spanner_only": _run_spanner_only,
}


def run_one(cfg: ExperimentConfig, n: int, seed: int) -> RunRecord:
    mode, wcap = cfg.weight_profile()
    g = gen_graph(cfg.family, n, seed, weight_mode=mode, W=wcap)
    runner = _RUNNERS[cfg.algo]
    start = time.perf_counter()
    try:
        out, detail = runner(cfg, g, seed)
    except (GraphError, HarnessError):
        raise
    except Exception as exc:
        # Capacity and aggregation faults already name the offending round.
        raise HarnessError(
            f"simulator fault (algo={cfg.algo}, n={n}, seed={seed}): {exc}"
        ) from exc
    wall = time.perf_counter() - start
    cols = _net_columns(out["net"])
    return RunRecord(
        algo=cfg.algo,
        family=cfg.family,
        n=n,
        seed=seed,
        x=out["x"],
        rounds_total=cols["rounds_total"],
        rounds_by_phase=cols["rounds_by_phase"],
        max_local_per_edge=cols["max_local_per_edge"],
        max_global_per_node=cols["max_global_per_node"],
        dropped=cols["dropped"],
        correctness=out["correctness"],
        value=out["value"],
        ok=bool(out["ok"]),
        wall_s=wall,
        detail=detail,
    )


def run_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    """One record per (n, seed), in grid order."""
    records = []
    for n in cfg.n_list:
        for seed in cfg.seeds:
            records.append(run_one(cfg, n, seed))
    return records


def records_to_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_FIELDS)
    for rec in records:
        wr.writerow(rec.to_row())
    return buf.getvalue()


def write_records(records: list[RunRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))


def read_records(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise HarnessError(f"no records in {path}")
    for row in rows:
        if row.get("schema") != CSV_SCHEMA:
            raise HarnessError(f"unsupported CSV schema {row.get('schema')!r}")
    return rows


# -- scaling fit ---------------------------------------------------------------

# Two-sided 95% t critical values for small degrees of freedom; beyond the
# table the normal quantile is close enough.
_T95 = {
    1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365,
    8: 2.306, 9: 2.262, 10: 2.228, 11: 2.201, 12: 2.179, 13: 2.160,
    14: 2.145, 15: 2.131, 16: 2.120, 17: 2.110, 18: 2.101, 19: 2.093,
    20: 2.086, 21: 2.080, 22: 2.074, 23: 2.069, 24: 2.064, 25: 2.060,
    26: 2.056, 27: 2.052, 28: 2.048, 29: 2.045, 30: 2.042,
}


def _t95(df: int) -> float:
    return _T95.get(df, 1.960)


@dataclass
class FitResult:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    points: tuple[tuple[float, float], ...]

    def __str__(self) -> str:
        return (
            f"slope={self.slope:.4f}  ci95=[{self.ci_low:.4f}, {self.ci_high:.4f}]"
            f"  points={len(self.points)}"
        )


def scaling_fit(records: list, x_axis: str = "n") -> FitResult:
    """Least-squares slope of log(rounds) against log(x).

    One point per distinct x value, using the median round count over that
    value's seeds.  Requires at least 3 distinct x values with at least 5
    runs each.
    """
    if x_axis not in ("n", "k"):
        raise HarnessError(f"x_axis must be 'n' or 'k', got {x_axis!r}")
    groups: dict[float, list[float]] = {}
    for rec in records:
        if isinstance(rec, RunRecord):
            raw_x = rec.n if x_axis == "n" else rec.x
            rounds = rec.rounds_total
        else:
            raw_x = rec["n"] if x_axis == "n" else rec["x"]
            rounds = rec["rounds_total"]
        if raw_x in ("", None):
            raise HarnessError("record lacks an x value for the requested axis")
        groups.setdefault(float(raw_x), []).append(float(rounds))
    if len(groups) < 3:
        raise HarnessError(f"need >= 3 distinct x values, got {len(groups)}")
    thin = [x for x, vals in groups.items() if len(vals) < 5]
    if thin:
        raise HarnessError(f"need >= 5 seeds per x value, short at x={sorted(thin)}")
    points = tuple(sorted((x, statistics.median(vals)) for x, vals in groups.items()))
    if any(x <= 0 or med <= 0 for x, med in points):
        raise HarnessError("x values and round counts must be positive for a log-log fit")
    lx = np.log([x for x, _ in points])
    ly = np.log([med for _, med in points])
    mx = lx.mean()
    sxx = float(((lx - mx) ** 2).sum())
    if sxx == 0:
        raise HarnessError("x values are all identical")
    slope = float(((lx - mx) * (ly - ly.mean())).sum() / sxx)
    intercept = float(ly.mean() - slope * mx)
    resid = ly - (intercept + slope * lx)
    df = len(points) - 2
    if df > 0:
        s2 = float((resid**2).sum() / df)
        stderr = math.sqrt(s2 / sxx)
        half = _t95(df) * stderr
    else:
        stderr = 0.0
        half = 0.0
    return FitResult(
        slope=slope,
        intercept=intercept,
        stderr=stderr,
        ci_low=slope - half,
        ci_high=slope + half,
        points=points,
    )


# -- argument handling ---------------------------------------------------------


def _parse_int_list(text: str) -> tuple[int, ...]:
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise HarnessError(f"bad integer list {text!r}") from exc


def _parse_lambda(text: str) -> float:
    if text.strip().lower() in ("inf", "infinite", "unlimited"):
        return INF
    try:
        return float(int(text))
    except ValueError as exc:
        raise HarnessError(f"lambda must be an integer or 'inf', got {text!r}") from exc


def read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise HarnessError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


_CONFIG_KEYS = (
    "algo",
    "family",
    "n",
    "seeds",
    "lambda",
    "gamma",
    "eps",
    "alpha",
    "x",
    "strict",
    "out",
    "weights",
    "wmax",
    "xi",
    "c_agg",
)


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge config-file values and flags; flags win."""
    filevals: dict[str, str] = {}
    if args.config:
        filevals = read_config_file(args.config)
        unknown = set(filevals) - set(_CONFIG_KEYS)
        if unknown:
            raise HarnessError(f"unknown config keys: {sorted(unknown)}")

    def pick(flag, key: str, conv):
        if flag is not None:
            return flag
        if key in filevals:
            return conv(filevals[key])
        return None

    algo = pick(args.algo, "algo", str)
    if algo is None:
        raise HarnessError("algo is required (flag or config file)")
    family = pick(args.family, "family", str) or "random_connected"
    n_list = pick(args.n, "n", _parse_int_list) or ()
    seeds = pick(args.seeds, "seeds", _parse_int_list) or ()
    lam = pick(args.lam, "lambda", _parse_lambda)
    gamma = pick(args.gamma, "gamma", int)
    eps = pick(args.eps, "eps", float)
    alpha = pick(args.alpha, "alpha", float)
    x = pick(args.x, "x", float)
    strict = args.strict
    if strict is None:
        strict = filevals.get("strict", "false").lower() in ("1", "true", "yes")
    out = pick(args.out, "out", str)
    weights = pick(args.weights, "weights", str)
    wmax = pick(args.wmax, "wmax", int)
    xi = pick(args.xi, "xi", float)
    c_agg = pick(args.c_agg, "c_agg", float)
    return ExperimentConfig(
        algo=algo,
        family=family,
        n_list=n_list,
        seeds=seeds,
        lam=lam if lam is not None else INF,
        gamma=gamma,
        eps=eps,
        alpha=alpha,
        x=x,
        strict=bool(strict),
        out=out,
        weights=weights,
        wmax=wmax,
        xi=xi,
        c_agg=c_agg if c_agg is not None else 1.0,
    )


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridnet",
        description="Run capacity-limited network experiments and fit scaling laws.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an algorithm over an (n, seed) grid")
    run_p.add_argument("--algo", choices=ALGOS)
    run_p.add_argument("--family", choices=FAMILIES)
    run_p.add_argument("--n", type=_parse_int_list, metavar="LIST")
    run_p.add_argument("--seeds", type=_parse_int_list, metavar="LIST")
    run_p.add_argument("--lambda", dest="lam", type=_parse_lambda, metavar="L|inf")
    run_p.add_argument("--gamma", type=int)
    run_p.add_argument("--eps", type=float)
    run_p.add_argument("--alpha", type=float)
    run_p.add_argument("--x", type=float)
    run_p.add_argument("--strict", action="store_true", default=None)
    run_p.add_argument("--out", metavar="PATH")
    run_p.add_argument("--config", metavar="PATH", help="key = value file; flags win")
    run_p.add_argument("--weights", choices=("unit", "uniform"))
    run_p.add_argument("--wmax", type=int)
    run_p.add_argument("--xi", type=float)
    run_p.add_argument("--c-agg", dest="c_agg", type=float)

    fit_p = sub.add_parser("fit", help="fit a log-log slope to a run CSV")
    fit_p.add_argument("--in", dest="infile", required=True, metavar="CSV")
    fit_p.add_argument("--x-axis", choices=("n", "k"), default="n")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    records = run_experiment(cfg)
    for rec in records:
        print(
            f"algo={rec.algo} family={rec.family} n={rec.n} seed={rec.seed}"
            f" rounds={rec.rounds_total} dropped={rec.dropped}"
            f" {rec.correctness}={rec.value} ok={int(rec.ok)}"
            f" wall={rec.wall_s:.3f}s"
        )
    if cfg.out:
        write_records(records, cfg.out)
        print(f"wrote {len(records)} records to {cfg.out}")
    passed = sum(1 for r in records if r.ok)
    print(f"validated {passed}/{len(records)} runs")
    return 0 if passed == len(records) else 1


def _cmd_fit(args: argparse.Namespace) -> int:
    rows = read_records(args.infile)
    fit = scaling_fit(rows, x_axis=args.x_axis)
    for x, med in fit.points:
        print(f"x={x:g} median_rounds={med:g}")
    print(fit)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_fit(args)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
