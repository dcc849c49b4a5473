"""Depth-first search turns any connected graph into a chain.

Walking the nodes in DFS first-visit order gives a path through the graph
whose total variation and cut count are at most twice the graph's own, for
every signal. This script checks that on a random graph.
"""
import numpy as np

from dfsdenoise.chain import dfs_order, random_dfs_order, verify_embedding
from dfsdenoise.graph import from_edges, random_connected_graph, total_variation

# The 7-node binary tree, labelled so that DFS visits the nodes in label order.
tree = from_edges([(0, 1), (1, 2), (1, 3), (0, 4), (4, 5), (4, 6)])
print("binary tree DFS order:", dfs_order(tree, 0).order.tolist())

rng = np.random.default_rng(0)
g = random_connected_graph(500, 800, seed=1)
print(f"random graph: {g.n_nodes} nodes, {g.n_edges} edges")

# A piecewise constant signal with four levels.
theta = rng.normal(size=4)[rng.integers(4, size=g.n_nodes)]
print("graph total variation:", round(total_variation(g, theta), 3))

worst = 0.0
for seed in range(200):
    c = random_dfs_order(g, seed)
    l1, l0 = verify_embedding(g, c, theta)
    worst = max(worst, l1, l0)
print(f"largest chain/graph ratio over 200 random DFS orders: {worst:.3f} (never above 2)")

# Weighted graphs: chain steps that are not graph edges get the smallest weight.
gw = random_connected_graph(200, 300, seed=2, weighted=True)
c = random_dfs_order(gw, 3, weighted=True)
print("weighted ratios:", tuple(round(r, 3) for r in verify_embedding(gw, c, rng.normal(size=200))))
