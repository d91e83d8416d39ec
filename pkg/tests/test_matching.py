from __future__ import annotations

import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akucb.augment import apply_augmentations, check_augmentation
from akucb.matching import (
    EnumerationTooLarge,
    MatchingTable,
    enumerate_matchings,
    greedy_matching,
    max_weight_matching,
    maximal_matchings,
    near_optimal_gaps,
    near_optimal_set,
    optimal_augmentation_set,
    weight_sum,
)
from akucb.network import NetworkGraph, grid_topology, is_matching, path_topology, random_topology, ring_topology

RING_W = (3, 2.5, 1, 3, 2.5, 1)


def brute_matchings(g):
    """Independent enumeration: every link subset filtered by disjointness."""
    out = []
    for r in range(g.link_count + 1):
        for sub in itertools.combinations(range(g.link_count), r):
            nodes = [x for lid in sub for x in g.links[lid]]
            if len(nodes) == len(set(nodes)):
                out.append(frozenset(sub))
    return out


def nx_optimum(g, w):
    h = nx.Graph()
    h.add_nodes_from(range(g.node_count))
    for lid, (u, v) in enumerate(g.links):
        h.add_edge(u, v, weight=float(w[lid]))
    m = nx.max_weight_matching(h)
    return sum(h[u][v]["weight"] for u, v in m)


def test_weight_sum_examples():
    assert weight_sum(set(), [1, 2]) == 0
    assert weight_sum({0, 2}, (1, 5, 2, 7)) == 3
    assert weight_sum({0, 2, 4}, (3, 2, 1, 3, 2, 1)) == 6


def test_mwm_path_of_three():
    m, val = max_weight_matching(path_topology(4), [1, 1, 1])
    assert m == {0, 2} and val == 2


def test_mwm_zero_weights():
    _, val = max_weight_matching(grid_topology(3, 3), np.zeros(12))
    assert val == 0


def test_ring_mwm_and_greedy_gap():
    g = ring_topology(6)
    m, val = max_weight_matching(g, RING_W)
    assert val == pytest.approx(6.5)
    assert is_matching(g, m)
    gm = greedy_matching(g, RING_W)
    assert gm == {0, 3}
    assert weight_sum(gm, RING_W) == 6


def test_greedy_tie_break_by_id():
    assert greedy_matching(ring_topology(6), np.zeros(6)) == {0, 2, 4}
    assert greedy_matching(path_topology(2), [0.7]) == {0}


def test_enumeration_counts():
    assert len(enumerate_matchings(ring_topology(3))) == 4
    assert len(enumerate_matchings(path_topology(2))) == 2
    assert len(enumerate_matchings(ring_topology(6))) == 18


def test_enumeration_guard():
    with pytest.raises(EnumerationTooLarge):
        enumerate_matchings(grid_topology(6, 6))


@pytest.mark.parametrize("g", [ring_topology(6), grid_topology(3, 3), random_topology(7, 12, 2)])
def test_enumeration_matches_brute_force(g):
    got = enumerate_matchings(g)
    assert len(got) == len(set(got))
    assert set(got) == set(brute_matchings(g))


def test_maximal_matchings_are_maximal():
    g = grid_topology(3, 3)
    for m in maximal_matchings(g):
        used = {x for lid in m for x in g.links[lid]}
        assert all(u in used or v in used for u, v in g.links)


def test_near_optimal_set_ring():
    g = ring_topology(6)
    got = near_optimal_set(g, RING_W, 0.9)
    expect = [m for m in brute_matchings(g) if weight_sum(m, RING_W) >= 5.85]
    assert set(got) == set(expect)
    optimal = {m for m in brute_matchings(g) if weight_sum(m, RING_W) == 6.5}
    assert set(near_optimal_set(g, RING_W, 1.0)) == optimal
    assert len(near_optimal_set(g, np.zeros(6), 0.5)) == 18


def test_near_optimal_gaps_diagnostic():
    g = ring_topology(6)
    lo, hi = near_optimal_gaps(g, RING_W, 0.5)
    assert 0 < lo <= hi == pytest.approx(0.5 * 6.5)
    assert near_optimal_gaps(g, np.zeros(6), 0.5) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 8), st.integers(0, 10**6))
def test_exact_solvers_agree_with_enumeration_and_networkx(n, seed):
    rng = np.random.default_rng(seed)
    max_links = min(12, n * (n - 1) // 2)
    g = random_topology(n, int(rng.integers(n - 1, max_links + 1)), seed)
    w = rng.random(g.link_count)
    best = max(weight_sum(m, w) for m in brute_matchings(g))
    m, val = max_weight_matching(g, w)
    assert is_matching(g, m)
    assert val == pytest.approx(best, abs=1e-12)
    assert val == pytest.approx(nx_optimum(g, w), abs=1e-9)
    assert MatchingTable(g).best(w)[1] == pytest.approx(best, abs=1e-12)
    assert weight_sum(greedy_matching(g, w), w) >= 0.5 * best - 1e-12


def test_large_graph_uses_blossom():
    g = random_topology(30, 60, 4)
    w = np.random.default_rng(0).random(60)
    m, val = max_weight_matching(g, w)
    assert is_matching(g, m)
    assert val == pytest.approx(nx_optimum(g, w))


def test_decomposition_identity_is_empty():
    g = ring_topology(6)
    assert optimal_augmentation_set(g, {0, 2}, {0, 2}, 2, np.ones(6)) == []


def test_decomposition_single_path():
    g = path_topology(4)
    w = [0.4, 0.9, 0.3]
    augs = optimal_augmentation_set(g, set(), {0, 2}, 2, w)
    # links 0 and 2 share no node, so each is its own component
    assert sorted(a.links for a in augs) == [(0,), (2,)]
    assert sum(a.gain for a in augs) == pytest.approx(0.7)
    s_prev = {1}
    augs = optimal_augmentation_set(g, s_prev, {0, 2}, 2, w)
    assert len(augs) == 1 and augs[0].size == 2
    assert augs[0].gain == pytest.approx(0.4 + 0.3 - 0.9)


def test_decomposition_alternating_cycle():
    g = ring_topology(6)
    w = np.ones(6)
    augs = optimal_augmentation_set(g, {0, 2, 4}, {1, 3, 5}, 2, w)
    total = sum(a.gain for a in augs)
    assert total >= (1 / 3) * 3 - 3
    for a in augs:
        assert a.size <= 2
        assert check_augmentation(g, {0, 2, 4}, a, 2) == []


@pytest.mark.parametrize("k", [2, 3, 4])
def test_decomposition_long_path_bound(k):
    g = path_topology(16)
    rng = np.random.default_rng(k)
    w = rng.random(g.link_count)
    s_prev = frozenset(range(1, 15, 2))
    target = frozenset(range(0, 15, 2))
    augs = optimal_augmentation_set(g, s_prev, target, k, w)
    used = [lid for a in augs for lid in a.links]
    assert len(used) == len(set(used))
    assert all(a.size <= k for a in augs)
    s_new = apply_augmentations(g, s_prev, augs)
    assert weight_sum(s_new, w) >= (k - 1) / (k + 1) * weight_sum(target, w) - 1e-9


def test_decomposition_rejects_non_matchings():
    with pytest.raises(ValueError):
        optimal_augmentation_set(ring_topology(6), {0, 1}, {2}, 2, np.ones(6))


def test_matching_table_counts():
    assert len(MatchingTable(grid_topology(4, 4))) == 400
    g = NetworkGraph(2, ((0, 1),))
    assert MatchingTable(g).best([0.3])[1] == pytest.approx(0.3)
