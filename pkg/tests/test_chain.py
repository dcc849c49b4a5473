import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dfsdenoise.chain import (EmbeddingViolation, chain_from_order, dfs_order, induced_chain_weights,
                              random_dfs_order, read_order, snake_orders, verify_embedding, write_order)
from dfsdenoise.graph import GraphError, from_edges, grid_graph, path_graph, random_connected_graph

from conftest import piecewise

# the 7-node binary tree labelled in DFS visiting order (0-based here)
BINARY7 = from_edges([(0, 1), (1, 2), (1, 3), (0, 4), (4, 5), (4, 6)])


def test_binary_tree_order_is_identity():
    assert dfs_order(BINARY7, 0).order.tolist() == list(range(7))


def test_binary_tree_ratio(rng):
    c = dfs_order(BINARY7, 0)
    for _ in range(200):
        l1, l0 = verify_embedding(BINARY7, c, rng.normal(size=7))
        assert l1 <= 2 and l0 <= 2


def test_simple_orders():
    assert dfs_order(path_graph(6), 0).order.tolist() == list(range(6))
    cyc = from_edges([(0, 1), (1, 2), (2, 3), (3, 0)])
    assert dfs_order(cyc, 0).order.tolist() == [0, 1, 2, 3]


def test_snake_orders():
    r, c = snake_orders(2, 2)
    assert r.order.tolist() == [0, 1, 3, 2]
    assert c.order.tolist() == [0, 2, 3, 1]
    r, c = snake_orders(1, 5)
    assert r.order.tolist() == c.order.tolist() == list(range(5))
    g = grid_graph(3, 3)
    for s in snake_orders(3, 3):
        o = s.order
        assert sorted(o.tolist()) == list(range(9))
        assert all(g.has_edge(int(a), int(b)) for a, b in zip(o[:-1], o[1:]))


def test_induced_weights():
    g = random_connected_graph(20, 10, seed=0)
    assert np.array_equal(induced_chain_weights(g, random_dfs_order(g, 1)), np.ones(19))
    w = np.array([0.5, 2.0, 1.5, 3.0])
    assert np.array_equal(induced_chain_weights(path_graph(5, w), chain_from_order(range(5))), w)
    star = from_edges([(0, 1, 3.0), (0, 2, 1.0), (0, 3, 2.0)])
    assert induced_chain_weights(star, chain_from_order([0, 1, 2, 3])).tolist() == [3.0, 1.0, 1.0]


def test_constant_signal_ratios():
    g = random_connected_graph(15, 5, seed=2)
    assert verify_embedding(g, random_dfs_order(g, 3), np.full(15, 2.0)) == (0.0, 0.0)


def test_non_dfs_order_can_exceed_two():
    theta = np.arange(5.0)
    l1, _ = verify_embedding(path_graph(5), chain_from_order([0, 4, 1, 3, 2]), theta)
    assert l1 == 2.5


def test_zero_graph_variation_with_chain_jumps_raises():
    g = from_edges([(0, 1)], n_nodes=3)
    with pytest.raises(EmbeddingViolation):
        verify_embedding(g, chain_from_order([0, 2, 1]), np.array([1.0, 1.0, 0.0]))


def test_bad_permutation():
    with pytest.raises(GraphError):
        chain_from_order([0, 0, 1])


def test_order_round_trip(tmp_path):
    g = random_connected_graph(50, 30, seed=3)
    c = random_dfs_order(g, 11)
    write_order(c, tmp_path / "o.txt")
    assert np.array_equal(read_order(tmp_path / "o.txt").order, c.order)


def test_random_order_deterministic():
    g = random_connected_graph(80, 80, seed=4)
    assert np.array_equal(random_dfs_order(g, 5).order, random_dfs_order(g, 5).order)
    assert not np.array_equal(random_dfs_order(g, 5).order, random_dfs_order(g, 6).order)


def test_permute_round_trip(rng):
    c = chain_from_order(rng.permutation(30))
    x = rng.normal(size=30)
    assert np.array_equal(c.unpermute(c.permute(x)), x)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 45), st.integers(0, 80), st.integers(0, 2**32 - 1), st.booleans(), st.booleans())
def test_embedding_bound_property(n, extra, seed, weighted, blocky):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(n, extra, seed=seed, weighted=weighted)
    c = random_dfs_order(g, seed + 1, weighted=weighted)
    theta = piecewise(rng, n) if blocky else rng.normal(size=n)
    l1, l0 = verify_embedding(g, c, theta)
    assert l1 <= 2 * (1 + 1e-12) and l0 <= 2 * (1 + 1e-12)
