import math
import random

import numpy as np
import pytest

from hybridnet.graphs import WeightedGraph, gen_graph
from hybridnet.sim import HybridConfig, HybridNetwork
from hybridnet.tokens import (
    SeedingFault,
    Token,
    TokenState,
    default_spread,
    local_dissemination,
    seeding_rate,
    token_balancing,
    token_dissemination,
    token_multiplication,
    token_seeding,
)


def _initial(n, k, seed, at=None):
    rng = random.Random(seed)
    out = {}
    for i in range(k):
        holder = at if at is not None else rng.randint(1, n)
        out.setdefault(holder, []).append(Token(payload=("t", i)))
    return out


def _net(n=64, seed=0, family="random_connected", **kw):
    g = gen_graph(family, n, seed=1)
    return HybridNetwork(g, HybridConfig(seed=seed, **kw))


def _holders_per_token(state):
    cnt = [0] * state.k
    for v in range(1, state.n + 1):
        for t in state.care[v]:
            cnt[t] += 1
    return cnt


def _knowers_per_token(state):
    out = []
    for t in range(state.k):
        col = (state.known[:, t >> 6] >> np.uint64(t & 63)) & np.uint64(1)
        out.append(int(col.sum()))
    return out


def test_zero_tokens_is_noop():
    net = _net()
    res = token_dissemination(net, {})
    assert res.complete
    assert res.metrics["rounds"] == 0


def test_single_node_keeps_everything():
    g = WeightedGraph(1, [])
    net = HybridNetwork(g, HybridConfig())
    res = token_dissemination(net, {1: [Token(("a",)), Token(("b",))]})
    assert res.complete
    assert res.state.k == 2


def test_payload_over_field_budget_rejected():
    net = _net()
    with pytest.raises(Exception):
        TokenState(net, {1: [Token((1, 2, 3, 4))]})


def test_balancing_spreads_hotspot():
    # all k tokens start at one node; afterwards ownership is near-uniform
    n, k = 256, 1024
    passes = 0
    for seed in range(20):
        net = _net(n, seed=seed)
        state = TokenState(net, _initial(n, k, seed, at=1))
        token_balancing(net, state)
        cnt = _holders_per_token(state)
        assert all(c == 1 for c in cnt)  # each token still at exactly one node
        cap = 4 * math.ceil(k / n) * math.ceil(math.log2(n))
        passes += max(state.care_sizes()) <= cap
    assert passes >= 19


def test_multiplication_guard_above_half():
    net = _net(8)
    state = TokenState(net, _initial(8, 5, 0))
    out = token_multiplication(net, state)
    assert out["skipped"] is True
    assert sum(state.care_sizes()) == 5


def test_multiplication_exact_doubling_counts():
    net = _net(8)
    state = TokenState(net, _initial(8, 1, 3))
    token_multiplication(net, state)
    assert sum(state.care_sizes()) == 8


def test_multiplication_holder_coverage():
    n, k, zeta = 512, 16, 4.0
    passes = 0
    for seed in range(20):
        net = _net(n, seed=seed)
        state = TokenState(net, _initial(n, k, seed))
        token_balancing(net, state)
        token_multiplication(net, state)
        floor_holders = n / (k * zeta * math.log(n))
        passes += min(_holders_per_token(state)) >= floor_holders
    assert passes >= 19


def test_seeding_rate_branches():
    n, x, zeta = 512, 6, 4.0
    thresh = n / (2 * zeta * math.log(n))
    k_hi = int(thresh) + 8
    assert seeding_rate(n, k_hi, x, zeta) == 1 / x
    k_lo = max(2, int(thresh) - 8)
    expect = (k_lo / (n * x)) * 2 * zeta * math.log(n)
    assert seeding_rate(n, k_lo, x, zeta) == pytest.approx(expect)


def test_seeding_x_out_of_range():
    net = _net(16)
    state = TokenState(net, _initial(16, 4, 0))
    with pytest.raises(SeedingFault):
        token_seeding(net, state, 1)
    with pytest.raises(SeedingFault):
        token_seeding(net, state, 9)


def test_seeding_know_probability():
    # after seeding, each token should be known by at least n/(2x) nodes in
    # nearly every (seed, token) pair
    n, k = 512, 32
    x = math.ceil(math.sqrt(k))
    good = total = 0
    for seed in range(200):
        net = _net(n, seed=seed)
        state = TokenState(net, _initial(n, k, seed))
        token_balancing(net, state)
        token_multiplication(net, state)
        token_seeding(net, state, x)
        for c in _knowers_per_token(state):
            good += c >= n / (2 * x)
            total += 1
    assert good / total >= 0.95


def test_flood_noop_when_saturated():
    net = _net(16)
    state = TokenState(net, {v: [Token(("t", v))] for v in range(1, 17)})
    for v in range(1, 17):
        for t in range(state.k):
            state._learn(v, t)
    out = local_dissemination(net, state, x=4)
    assert state.complete()
    assert out["rounds"] <= math.ceil(2.0 * 4 * math.log2(16)) + 1


def test_flood_two_node_path():
    g = gen_graph("path", 2, seed=0)
    net = HybridNetwork(g, HybridConfig())
    state = TokenState(net, {1: [Token(("only",))]})
    local_dissemination(net, state, x=2)
    assert state.knows(2, 0)


def test_flood_from_far_end_of_path():
    # one-sided start with a round budget covering the full path length:
    # holders must announce everything they know when the flood starts,
    # or the far end never hears about any token
    g = gen_graph("path", 32, seed=0)
    net = HybridNetwork(g, HybridConfig(seed=7))
    state = TokenState(net, {1: [Token(("t", i)) for i in range(4)]})
    budget_x = 6  # ceil(2 * 6 * ln 32) = 42 rounds >= 31 hops
    local_dissemination(net, state, x=budget_x)
    assert state.complete()


def test_cycle_post_seeding_completion():
    passes = 0
    for seed in range(20):
        g = gen_graph("cycle", 256, seed=1)
        net = HybridNetwork(g, HybridConfig(seed=seed))
        res = token_dissemination(net, _initial(256, 64, seed))
        passes += res.complete
    assert passes >= 19


def test_one_token_path_everyone_learns():
    g = gen_graph("path", 4, seed=0)
    net = HybridNetwork(g, HybridConfig(seed=0))
    res = token_dissemination(net, {1: [Token(("solo",))]})
    assert res.complete


def test_conservation_across_pipeline():
    n, k = 128, 16
    net = _net(n, seed=2)
    state = TokenState(net, _initial(n, k, 2))
    token_balancing(net, state)
    assert sorted(t for v in range(1, n + 1) for t in state.care[v]) == list(range(k))
    token_multiplication(net, state)
    assert min(_holders_per_token(state)) >= 1
    token_seeding(net, state, default_spread(k))
    assert min(_knowers_per_token(state)) >= 1


def test_dissemination_deterministic():
    def run():
        net = _net(64, seed=11)
        res = token_dissemination(net, _initial(64, 16, 11))
        return res.metrics["rounds"], res.state.known.tobytes(), net.ledger.to_csv()

    assert run() == run()


def test_copy_target_formula_small():
    n, k = 64, 8
    net = _net(n, seed=4)
    state = TokenState(net, _initial(n, k, 4))
    token_balancing(net, state)
    token_multiplication(net, state)
    assert sum(state.care_sizes()) == k * 2 ** int(math.log2(n / k))
