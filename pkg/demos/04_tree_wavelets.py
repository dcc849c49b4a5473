"""Unbalanced Haar wavelets on a tree.

The basis is orthonormal, and a signal with few jumps along the tree has few
nonzero coefficients. Soft-thresholding the coefficients gives the wavelet
denoiser, compared here with the DFS fused lasso on the same tree.
"""
import numpy as np

from dfsdenoise.chain import random_dfs_order
from dfsdenoise.denoisers import dfs_fused_lasso, wavelet_denoise
from dfsdenoise.graph import cut_metric
from dfsdenoise.signals import add_noise, random_tree, tree_piecewise_signal
from dfsdenoise.wavelets import build_tree_wavelets, sparsity_bound

t = random_tree(2000, 2, 10, seed=0)
basis = build_tree_wavelets(t)
w = basis.matrix
print("orthonormality error:", abs((w @ w.T - np.eye(t.n_nodes))).max())

theta0 = tree_piecewise_signal(t, target_tv=5 * np.sqrt(t.n_nodes), sparsity=10, seed=1)
coef = basis.forward(theta0)
nnz = np.count_nonzero(np.abs(coef[1:]) > 1e-9)
cut = cut_metric(t.graph, theta0, tol=1e-12)
print(f"jumps: {cut}, nonzero wavelet coefficients: {nnz}, "
      f"bound: {sparsity_bound(t.n_nodes, t.graph.max_degree) * cut}")

y = add_noise(theta0, 0.5, seed=2)
c = random_dfs_order(t.graph, 3)
for name, fit, lams in [
    ("wavelet", lambda lam: wavelet_denoise(basis, y, lam).theta_hat, np.geomspace(0.05, 3, 20)),
    ("DFS fused lasso", lambda lam: dfs_fused_lasso(t.graph, c, y, lam).theta_hat, np.geomspace(0.1, 30, 20)),
]:
    scores = [np.mean((fit(lam) - theta0) ** 2) for lam in lams]
    print(f"{name:>16}: best MSE {min(scores):.4f}")
