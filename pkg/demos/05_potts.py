"""Piecewise constant fits with a penalty per jump.

The 1d Potts problem charges lambda for every change of level instead of its
size. The optimal-partition DP solves it exactly; run along a DFS chain it
gives a graph segmentation.
"""
import numpy as np

from dfsdenoise.chain import random_dfs_order
from dfsdenoise.graph import piece_count, random_geometric_graph
from dfsdenoise.potts import Potts1DProblem, dfs_potts, potts_oracle, solve_potts1d
from dfsdenoise.signals import add_noise, seeded_partition_signal

rng = np.random.default_rng(0)
y = np.concatenate([rng.normal(0, 0.2, 30), rng.normal(2, 0.2, 20), rng.normal(-1, 0.2, 25)])
sol = solve_potts1d(Potts1DProblem(y, 1.0))
for start, stop, level in sol.segments:
    print(f"segment [{start:2d}, {stop:2d}): level {level:+.3f}")

small = y[::6]
print("DP objective:", solve_potts1d(Potts1DProblem(small, 0.5)).objective,
      "exhaustive:", potts_oracle(small, 0.5))

g = random_geometric_graph(3000, 3, seed=1)
theta0 = seeded_partition_signal(g, 6, target_tv=40.0, seed=2)
noisy = add_noise(theta0, 0.3, seed=3)
fit = dfs_potts(g, random_dfs_order(g, 4), noisy, 0.5)
print(f"graph: {g.n_nodes} nodes; true pieces {piece_count(g, theta0)}, fitted pieces {piece_count(g, fit)}, "
      f"MSE {np.mean((fit - theta0) ** 2):.4f} (noise variance 0.09)")
