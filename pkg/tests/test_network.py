from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akucb.network import (
    Matching,
    NetworkGraph,
    grid_topology,
    is_matching,
    max_degree,
    path_topology,
    random_topology,
    ring_topology,
)


def test_grid_sizes():
    g = grid_topology(4, 4)
    assert (g.node_count, g.link_count) == (16, 24)
    g = grid_topology(1, 1)
    assert (g.node_count, g.link_count) == (1, 0)
    g = grid_topology(1, 2)
    assert (g.node_count, g.link_count) == (2, 1)


@pytest.mark.parametrize("rows,cols", [(2, 3), (3, 4), (5, 2)])
def test_grid_link_count_formula(rows, cols):
    g = grid_topology(rows, cols)
    assert g.link_count == rows * (cols - 1) + cols * (rows - 1)
    assert g.is_connected()


def test_ring_six():
    g = ring_topology(6)
    assert (g.node_count, g.link_count) == (6, 6)
    assert all(g.degree(v) == 2 for v in range(6))
    for i in range(6):
        assert set(g.links[i]) & set(g.links[(i + 1) % 6])


def test_ring_rejects_small():
    with pytest.raises(ValueError):
        ring_topology(2)


def test_triangle_matchings_are_single_links():
    g = ring_topology(3)
    for a, b in itertools.combinations(range(3), 2):
        assert not is_matching(g, {a, b})


def test_c4_maximum_matching():
    g = ring_topology(4)
    assert is_matching(g, {0, 2})
    assert is_matching(g, {1, 3})
    assert not is_matching(g, {0, 1})


def test_random_topology_shapes():
    g = random_topology(50, 200, 3)
    assert (g.node_count, g.link_count) == (50, 200)
    assert g.is_connected()
    assert random_topology(2, 1, 9).links == ((0, 1),)
    tree = random_topology(5, 4, 1)
    assert tree.link_count == 4 and tree.is_connected()


def test_random_topology_reproducible():
    assert random_topology(20, 40, 7).links == random_topology(20, 40, 7).links
    assert random_topology(20, 40, 7).links != random_topology(20, 40, 8).links


@pytest.mark.parametrize("n,m", [(5, 3), (5, 11), (0, 0)])
def test_random_topology_infeasible(n, m):
    with pytest.raises(ValueError):
        random_topology(n, m, 0)


def test_is_matching_examples():
    g = ring_topology(6)
    assert is_matching(g, {0, 2, 4})
    assert not is_matching(g, {0, 1})
    assert is_matching(g, set())
    with pytest.raises(ValueError):
        is_matching(g, {6})


def test_max_degree():
    assert max_degree(ring_topology(6)) == 2
    assert max_degree(grid_topology(4, 4)) == 4
    assert max_degree(grid_topology(1, 2)) == 1


def test_graph_rejects_bad_links():
    with pytest.raises(ValueError):
        NetworkGraph(3, ((0, 0),))
    with pytest.raises(ValueError):
        NetworkGraph(3, ((0, 1), (1, 0)))
    with pytest.raises(ValueError):
        NetworkGraph(2, ((0, 2),))


def test_matching_type_checks_conflicts():
    g = path_topology(4)
    m = Matching(g, [0, 2])
    assert m == {0, 2} and m.mate == {0: 0, 1: 0, 2: 2, 3: 2}
    with pytest.raises(ValueError):
        Matching(g, [0, 1])


def test_edge_list_round_trip(tmp_path):
    g = random_topology(12, 20, 5)
    path = tmp_path / "g.txt"
    g.save(path)
    assert path.read_text().splitlines()[0] == "nodes 12"
    assert NetworkGraph.load(path) == g


@st.composite
def graphs(draw, max_nodes=7):
    n = draw(st.integers(2, max_nodes))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=12))
    return NetworkGraph(n, tuple(chosen))


@given(graphs())
def test_every_link_in_two_adjacency_sets(g):
    counts = [0] * g.link_count
    for inc in g.incident:
        for lid in inc:
            counts[lid] += 1
    assert all(c == 2 for c in counts)


@settings(max_examples=200)
@given(graphs(), st.data())
def test_is_matching_matches_pairwise_oracle(g, data):
    if g.link_count == 0:
        return
    subset = data.draw(st.sets(st.integers(0, g.link_count - 1)))
    disjoint = all(not set(g.links[a]) & set(g.links[b]) for a, b in itertools.combinations(subset, 2))
    assert is_matching(g, subset) == disjoint
