"""Denoising a piecewise constant image on a grid.

Compares one random DFS chain, the average of five, the two snake chains and
Laplacian smoothing, each at its best lambda from a small grid.
"""
import numpy as np

from dfsdenoise.chain import random_dfs_order, snake_orders
from dfsdenoise.denoisers import chain_fits, derived_seeds, dfs_fused_lasso, laplacian_smoothing, multi_dfs_average
from dfsdenoise.graph import grid_graph
from dfsdenoise.signals import add_noise, grid_piecewise_signal

r = 120
g = grid_graph(r, r)
theta0 = grid_piecewise_signal(r, r, pieces=5, target_tv=5 * r, seed=1)
y = add_noise(theta0, 1.0, seed=2)
lams = np.geomspace(0.3, 30, 15)


def mse(est):
    return np.mean((est - theta0) ** 2)


def best(fit):
    scores = [mse(fit(lam)) for lam in lams]
    i = int(np.argmin(scores))
    return scores[i], lams[i]


seeds = derived_seeds(3, 5)
one = random_dfs_order(g, seeds[0])
snakes = list(snake_orders(r, r))
results = {
    "raw data": (mse(y), None),
    "1 random DFS": best(lambda lam: dfs_fused_lasso(g, one, y, lam).theta_hat),
    "5 random DFS": best(lambda lam: multi_dfs_average(g, y, lam, K=5, seeds=seeds).theta_hat),
    "2 snakes": best(lambda lam: chain_fits(snakes, y, lam).mean(axis=0)),
    "Laplacian": best(lambda lam: laplacian_smoothing(g, y, lam).theta_hat),
}
for name, (score, lam) in results.items():
    tail = "" if lam is None else f"  (lambda {lam:.3g})"
    print(f"{name:>14}: MSE {score:.4f}{tail}")
