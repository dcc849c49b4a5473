import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dfsdenoise.chain import chain_from_order, random_dfs_order, snake_orders
from dfsdenoise.denoisers import (ConvergenceError, LaplacianSmoother, chain_fits, derived_seeds, dfs_fused_lasso,
                                  laplacian_smoothing, multi_dfs_average, soft_threshold, spanning_tree_wavelets,
                                  wavelet_denoise)
from dfsdenoise.fl1d import fl1d
from dfsdenoise.graph import (GraphError, cut_metric, dfs_spanning_tree, grid_graph, path_graph,
                              random_connected_graph, random_spanning_tree, total_variation)
from dfsdenoise.signals import add_noise, grid_piecewise_signal, random_tree, tree_piecewise_signal
from dfsdenoise.wavelets import build_tree_wavelets, haar_vector, sparsity_bound

from conftest import piecewise, random_small_tree


# ---- DFS fused lasso -------------------------------------------------------

def test_identity_chain_equals_1d_solver(rng):
    g = path_graph(40)
    y = rng.normal(size=40)
    res = dfs_fused_lasso(g, chain_from_order(range(40)), y, 0.6)
    assert np.array_equal(res.theta_hat, fl1d(y, 0.6))
    assert res.diagnostics["kkt_residual"] <= 1e-12


def test_dfs_lambda_zero(rng):
    g = random_connected_graph(60, 40, seed=1)
    y = rng.normal(size=60)
    assert np.array_equal(dfs_fused_lasso(g, random_dfs_order(g, 3), y, 0.0).theta_hat, y)


def test_permuted_truth_within_twice_tv(rng):
    g = random_connected_graph(80, 120, seed=2)
    theta0 = piecewise(rng, 80)
    c = random_dfs_order(g, 9)
    assert np.abs(np.diff(c.permute(theta0))).sum() <= 2 * total_variation(g, theta0) + 1e-12


def test_weighted_dfs_uses_induced_weights(rng):
    g = random_connected_graph(30, 30, seed=3, weighted=True)
    c = random_dfs_order(g, 4, weighted=True)
    y = rng.normal(size=30)
    res = dfs_fused_lasso(g, c, y, 0.5, use_weights=True)
    assert np.allclose(c.permute(res.theta_hat), fl1d(c.permute(y), 0.5, c.chain_weights))


def test_signal_shape_checked():
    g = path_graph(5)
    with pytest.raises(GraphError):
        dfs_fused_lasso(g, chain_from_order(range(5)), np.zeros(4), 1.0)


# ---- multi-chain combination ----------------------------------------------

def test_k1_equals_single_fit(rng):
    g = random_connected_graph(70, 50, seed=5)
    y = rng.normal(size=70)
    s = derived_seeds(11, 1)[0]
    single = dfs_fused_lasso(g, random_dfs_order(g, s), y, 0.4).theta_hat
    assert np.array_equal(multi_dfs_average(g, y, 0.4, K=1, seed=11).theta_hat, single)


def test_equal_seeds_reproduce_single(rng):
    g = random_connected_graph(50, 50, seed=6)
    y = rng.normal(size=50)
    single = dfs_fused_lasso(g, random_dfs_order(g, 7), y, 0.3).theta_hat
    for combine in ("mean", "median"):
        out = multi_dfs_average(g, y, 0.3, K=4, seeds=[7] * 4, combine=combine).theta_hat
        assert np.allclose(out, single, atol=1e-15)


def test_first_derived_seed_independent_of_k():
    assert np.array_equal(derived_seeds(3, 1)[0], derived_seeds(3, 5)[0])


def test_threads_do_not_change_result(rng):
    g = random_connected_graph(300, 300, seed=8)
    y = rng.normal(size=300)
    a = multi_dfs_average(g, y, 0.5, K=6, seed=1, workers=1).theta_hat
    b = multi_dfs_average(g, y, 0.5, K=6, seed=1, workers=3).theta_hat
    assert np.array_equal(a, b)


def test_median_is_per_node(rng):
    g = random_connected_graph(40, 40, seed=9)
    y = rng.normal(size=40)
    seeds = derived_seeds(2, 5)
    fits = chain_fits([random_dfs_order(g, s) for s in seeds], y, 0.5)
    out = multi_dfs_average(g, y, 0.5, K=5, seeds=seeds, combine="median").theta_hat
    assert np.array_equal(out, np.median(fits, axis=0))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.floats(-100, 100), st.integers(0, 2**32 - 1))
def test_average_shift_equivariant(n, c, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(n, n, seed=seed)
    y = rng.normal(size=n)
    a = multi_dfs_average(g, y + c, 0.3, K=3, seed=seed).theta_hat
    b = multi_dfs_average(g, y, 0.3, K=3, seed=seed).theta_hat
    assert np.allclose(a, b + c, atol=1e-9 * (1 + abs(c)))


def _best_mse(fit, lams, theta0):
    return min(np.mean((fit(lam) - theta0) ** 2) for lam in lams)


def test_averaging_beats_single_dfs_on_grid():
    r = 100
    g = grid_graph(r, r)
    theta0 = grid_piecewise_signal(r, r, 5, r, seed=0)
    lams = np.geomspace(0.5, 20, 12)
    wins = 0
    for d in range(20):
        y = add_noise(theta0, 1.0, (1, d))
        s = derived_seeds((2, d), 5)
        one = _best_mse(lambda lam: dfs_fused_lasso(g, random_dfs_order(g, s[0]), y, lam).theta_hat, lams, theta0)
        five = _best_mse(lambda lam: multi_dfs_average(g, y, lam, K=5, seeds=s).theta_hat, lams, theta0)
        wins += five <= one
    assert wins >= 16


def test_snake_chains_average():
    g = grid_graph(6, 7)
    rows, cols = snake_orders(6, 7, g)
    y = np.random.default_rng(0).normal(size=42)
    fits = chain_fits([rows, cols], y, 0.5)
    assert np.allclose(fits[0], rows.unpermute(fl1d(rows.permute(y), 0.5)))


# ---- Laplacian smoothing ---------------------------------------------------

def test_laplacian_hand_solution():
    res = laplacian_smoothing(path_graph(3), [1.0, 0.0, 0.0], 0.5, tol=1e-12)
    assert np.allclose(res.theta_hat, [0.625, 0.25, 0.125], atol=1e-10)


def test_laplacian_matches_dense_solve(rng):
    g = random_connected_graph(50, 80, seed=3, weighted=True)
    y = rng.normal(size=50)
    for weighted in (False, True):
        L = g.laplacian(weighted).toarray()
        ref = np.linalg.solve(np.eye(50) + 2 * 0.7 * L, y)
        assert np.allclose(laplacian_smoothing(g, y, 0.7, tol=1e-12, weighted=weighted).theta_hat, ref, atol=1e-9)


def test_laplacian_limits(rng):
    g = random_connected_graph(30, 20, seed=4)
    y = rng.normal(size=30)
    assert np.array_equal(laplacian_smoothing(g, y, 0.0).theta_hat, y)
    assert np.abs(laplacian_smoothing(g, y, 1e6).theta_hat - y.mean()).max() < 1e-3


def test_laplacian_is_linear(rng):
    g = random_connected_graph(60, 60, seed=5)
    sm = LaplacianSmoother(g)
    a, b = rng.normal(size=60), rng.normal(size=60)
    fa, fb, fab = (sm(v, 1.3, tol=1e-12).theta_hat for v in (a, b, 2 * a - 3 * b))
    assert np.allclose(fab, 2 * fa - 3 * fb, atol=1e-8)


def test_laplacian_reports_non_convergence(rng):
    g = grid_graph(30, 30)
    with pytest.raises(ConvergenceError):
        laplacian_smoothing(g, rng.normal(size=900), 50.0, tol=1e-12, max_iter=2)


def test_laplacian_requires_connected():
    from dfsdenoise.graph import from_edges
    with pytest.raises(GraphError):
        laplacian_smoothing(from_edges([(0, 1)], n_nodes=3), np.zeros(3), 1.0)


# ---- wavelets --------------------------------------------------------------

def test_wavelet_small_bases():
    assert np.allclose(build_tree_wavelets(random_tree(1, seed=0)).dense(), [[1.0]])
    w = build_tree_wavelets(dfs_spanning_tree(path_graph(2))).dense()
    s = 1 / math.sqrt(2)
    assert np.allclose(np.abs(w), s) and np.allclose(w[0], [s, s]) and np.isclose(w[1] @ [1, 1], 0)


def test_haar_vector_unit_and_zero_sum():
    for a, b in [(1, 1), (3, 5), (10, 1)]:
        va, vb = haar_vector(a, b)
        assert a * va + b * vb == pytest.approx(0, abs=1e-15)
        assert a * va**2 + b * vb**2 == pytest.approx(1, abs=1e-15)


def test_wavelet_orthonormal_and_sparse(rng):
    for _ in range(25):
        t = random_small_tree(rng)
        basis = build_tree_wavelets(t)
        w = basis.dense()
        n = t.n_nodes
        assert np.abs(w @ w.T - np.eye(n)).max() <= 1e-10
        bound = sparsity_bound(n, t.graph.max_degree)
        for _ in range(10):
            theta = piecewise(rng, n, int(rng.integers(1, 5)))
            nnz = int(np.count_nonzero(np.abs(basis.forward(theta)[1:]) > 1e-9))
            assert nnz <= bound * cut_metric(t.graph, theta)


def test_wavelet_on_other_spanning_trees(rng):
    g = random_connected_graph(50, 60, seed=6)
    for t in (dfs_spanning_tree(g, 3, "random", 1), random_spanning_tree(g, 2)):
        basis = spanning_tree_wavelets(g, t)
        w = basis.dense()
        assert np.abs(w.T @ w - np.eye(50)).max() <= 1e-10


def test_wavelet_denoise_lambda_zero(rng):
    basis = build_tree_wavelets(random_tree(40, seed=3))
    y = rng.normal(size=40)
    assert np.allclose(wavelet_denoise(basis, y, 0.0).theta_hat, y, atol=1e-12)


def test_wavelet_denoise_heavy_threshold():
    basis = build_tree_wavelets(dfs_spanning_tree(path_graph(4)))
    y = np.array([10.0, 10.5, 9.5, 10.2])
    coef = basis.forward(y)
    lam = np.abs(coef[1:]).max() + 0.1
    out = wavelet_denoise(basis, y, lam).theta_hat
    # only the constant coefficient survives, shrunk by lam
    assert np.allclose(out, (coef[0] - lam) / 2.0)


def test_wavelet_denoise_soft_threshold_kkt_and_optimality(rng):
    basis = build_tree_wavelets(random_tree(30, seed=5))
    y = rng.normal(size=30)
    lam = 0.4
    out = wavelet_denoise(basis, y, lam).theta_hat
    c_in, c_out = basis.forward(y), basis.forward(out)
    assert np.allclose(np.abs(c_in) - np.abs(c_out), np.minimum(lam, np.abs(c_in)), atol=1e-12)

    def obj(th):
        return 0.5 * np.sum((y - th) ** 2) + lam * np.abs(basis.forward(th)).sum()

    best = obj(out)
    for _ in range(1000):
        assert obj(out + rng.normal(scale=0.01, size=30)) >= best - 1e-12


def test_soft_threshold():
    assert np.array_equal(soft_threshold([-3.0, -0.5, 0.0, 0.5, 3.0], 1.0), [-2.0, 0.0, 0.0, 0.0, 2.0])


def test_tree_signal_has_sparse_wavelet_coefficients():
    t = random_tree(200, seed=1)
    theta = tree_piecewise_signal(t, 20.0, 3, seed=2)
    coef = build_tree_wavelets(t).forward(theta)
    assert np.count_nonzero(np.abs(coef[1:]) > 1e-9) <= sparsity_bound(200, t.graph.max_degree) * 3
