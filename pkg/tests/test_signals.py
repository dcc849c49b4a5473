import numpy as np
import pytest

from dfsdenoise.graph import cut_metric, grid_graph, random_connected_graph, random_geometric_graph, total_variation
from dfsdenoise.signals import (SignalSpec, add_noise, grid_piecewise_signal, natural_tv, random_tree, read_signal,
                                seeded_partition, seeded_partition_signal, tree_piecewise_signal, write_signal)


def test_seeded_partition_sizes():
    g = random_connected_graph(1000, 500, seed=0)
    lab = seeded_partition(g, 10, seed=1)
    sizes = np.bincount(lab, minlength=10)
    assert sizes.sum() == 1000 and np.all(sizes[:9] == 100) and sizes[9] == 100


def test_seeded_partition_remainder_goes_last():
    g = random_connected_graph(1007, 300, seed=2)
    sizes = np.bincount(seeded_partition(g, 10, seed=3))
    assert np.all(sizes[:9] == 100) and sizes[9] == 107


def test_seeded_partition_signal_tv():
    g = random_geometric_graph(2000, 3, seed=1)
    for tv in (1.0, 37.5):
        theta = seeded_partition_signal(g, 10, tv, seed=5)
        assert total_variation(g, theta) == pytest.approx(tv, rel=1e-9)
    one = seeded_partition_signal(g, 1, 0.0, seed=5)
    assert np.ptp(one) == 0
    with pytest.raises(ValueError):
        seeded_partition_signal(g, 1, 3.0, seed=5)


def test_grid_piecewise():
    assert np.ptp(grid_piecewise_signal(10, 12, 1, 0.0, seed=0)) == 0
    th = grid_piecewise_signal(40, 40, 5, 40.0, seed=2)
    g = grid_graph(40, 40)
    assert total_variation(g, th) == pytest.approx(40.0, rel=1e-9)


def test_grid_rectangle_cut_count():
    # centred 20x10 block on a 20x20 grid covers half of it
    rect = [(0.0, 0.25, 1.0, 0.75, 1.0)]
    th = grid_piecewise_signal(20, 20, 2, 40.0, rectangles=rect)
    assert cut_metric(grid_graph(20, 20), th) == 2 * 20


def test_grid_signal_resolution_consistent():
    # the centre pixel of each 3x3 block sits where the coarse pixel centre does
    a = grid_piecewise_signal(20, 20, 4, 1.0, seed=3).reshape(20, 20)
    b = grid_piecewise_signal(60, 60, 4, 1.0, seed=3).reshape(60, 60)[1::3, 1::3]
    la = np.unique(a, return_inverse=True)[1]
    lb = np.unique(b, return_inverse=True)[1]
    assert np.array_equal(la, lb) and np.unique(a).size > 1


def test_random_tree_examples():
    assert random_tree(1, seed=0).n_nodes == 1
    t = random_tree(3, seed=0)
    assert t.parent.tolist() == [-1, 0, 0]
    for s in range(5):
        t = random_tree(500, seed=s)
        assert t.graph.n_edges == 499 and t.graph.is_connected() and t.graph.max_degree <= 11


def test_tree_piecewise_signal():
    t = random_tree(300, seed=1)
    assert np.ptp(tree_piecewise_signal(t, 0.0, 0, seed=1)) == 0
    th = tree_piecewise_signal(t, 25.0, 7, seed=2)
    assert cut_metric(t.graph, th, tol=1e-12) == 7
    assert total_variation(t.graph, th) == pytest.approx(25.0, rel=1e-9)
    with pytest.raises(ValueError):
        tree_piecewise_signal(t, 1.0, 0)


def test_chain_tree_step():
    from dfsdenoise.graph import dfs_spanning_tree, path_graph
    t = dfs_spanning_tree(path_graph(20), 0)
    th = tree_piecewise_signal(t, 2.0, 1, seed=4)
    assert np.unique(th).size == 2 and np.count_nonzero(np.diff(th)) == 1


def test_noise():
    theta = np.linspace(0, 1, 50)
    assert np.abs(add_noise(theta, 1e-12, 0) - theta).max() < 1e-10
    assert np.array_equal(add_noise(theta, 0.3, 7), add_noise(theta, 0.3, 7))
    eps = add_noise(np.zeros(10**6), 0.2, 1)
    assert eps.var() == pytest.approx(0.04, rel=0.02)
    with pytest.raises(ValueError):
        add_noise(theta, 0.0)


def test_signal_file_round_trip(tmp_path, rng):
    x = rng.normal(size=200) * 10.0 ** rng.integers(-8, 8, size=200)
    write_signal(x, tmp_path / "s.txt")
    assert np.array_equal(read_signal(tmp_path / "s.txt"), x)


def test_generators_deterministic():
    g = random_connected_graph(300, 100, seed=1)
    assert np.array_equal(seeded_partition_signal(g, 5, 3.0, seed=4), seeded_partition_signal(g, 5, 3.0, seed=4))
    t = random_tree(100, seed=9)
    assert np.array_equal(t.parent, random_tree(100, seed=9).parent)


def test_signal_spec():
    assert SignalSpec("grid-piecewise", tv_scale=5).target_tv(100) == pytest.approx(50.0)
    assert SignalSpec("seeded-partition", tv=3.0).target_tv(10**6) == 3.0
    assert natural_tv(400) == 20.0
    with pytest.raises(ValueError):
        SignalSpec("wiggly")
