"""DFS node orderings and the chain graphs they induce."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, GraphError, _traverse, grid_graph

__all__ = [
    "ChainOrder",
    "EmbeddingViolation",
    "dfs_order",
    "random_dfs_order",
    "chain_from_order",
    "snake_orders",
    "induced_chain_weights",
    "chain_differences",
    "verify_embedding",
    "write_order",
    "read_order",
]


class EmbeddingViolation(AssertionError):
    """A chain has positive variation where the graph has none."""


@dataclass(frozen=True, eq=False)
class ChainOrder:
    """A node permutation; ``order[i]`` is the ``i``-th node along the chain."""

    order: np.ndarray
    inverse: np.ndarray
    chain_weights: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.order.size)

    def permute(self, x) -> np.ndarray:
        """Graph-indexed vector to chain-indexed (``P x``)."""
        return np.asarray(x)[self.order]

    def unpermute(self, z) -> np.ndarray:
        """Chain-indexed vector back to graph indexing (``P^T z``)."""
        return np.asarray(z)[self.inverse]


def chain_from_order(order, chain_weights=None) -> ChainOrder:
    order = np.asarray(order, dtype=np.int64)
    n = order.size
    if not np.array_equal(np.sort(order), np.arange(n)):
        raise GraphError("order is not a permutation of 0..n-1")
    inverse = np.empty(n, dtype=np.int64)
    inverse[order] = np.arange(n)
    if chain_weights is None:
        chain_weights = np.ones(max(n - 1, 0))
    return ChainOrder(order, inverse, np.asarray(chain_weights, dtype=np.float64))


def dfs_order(g: Graph, root: int = 0, edge_order="input", seed=None,
              weighted: bool = False) -> ChainOrder:
    """Nodes in first-visit order of a depth-first search from ``root``.

    ``edge_order='random'`` shuffles every neighbor list with ``seed`` before
    the search. With ``weighted`` the chain carries the induced edge weights
    (graph weight for chain steps that are graph edges, the minimum graph
    weight otherwise).
    """
    order, _, _ = _traverse(g, root, edge_order, seed)
    c = chain_from_order(order)
    if weighted:
        c = ChainOrder(c.order, c.inverse, induced_chain_weights(g, c))
    return c


def random_dfs_order(g: Graph, seed=None, weighted: bool = False) -> ChainOrder:
    """DFS from a uniformly random root with shuffled neighbor lists."""
    rng = np.random.default_rng(seed)
    root = int(rng.integers(g.n_nodes))
    return dfs_order(g, root, "random", rng.integers(2**63), weighted)


def snake_orders(rows: int, cols: int, g: Graph | None = None) -> tuple[ChainOrder, ChainOrder]:
    """Row-wise and column-wise boustrophedon orders of a row-major grid."""
    if rows < 1 or cols < 1:
        raise GraphError("grid dimensions must be positive")
    if g is not None and g.n_nodes != rows * cols:
        raise GraphError(f"graph has {g.n_nodes} nodes, grid {rows}x{cols} has {rows * cols}")
    ids = np.arange(rows * cols).reshape(rows, cols)
    by_row = ids.copy()
    by_row[1::2] = by_row[1::2, ::-1]
    by_col = ids.T.copy()
    by_col[1::2] = by_col[1::2, ::-1]
    return chain_from_order(by_row.ravel()), chain_from_order(by_col.ravel())


def induced_chain_weights(g: Graph, c: ChainOrder) -> np.ndarray:
    """Weight of each chain step: the graph edge weight if the two consecutive
    nodes are adjacent, otherwise the smallest edge weight in the graph."""
    n = c.n_nodes
    if n < 2:
        return np.zeros(0)
    a, b = c.order[:-1], c.order[1:]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    w_min = g.weights.min() if g.n_edges else 1.0
    key_edges = g.heads * n + g.tails
    srt = np.argsort(key_edges)
    key = lo * n + hi
    pos = np.searchsorted(key_edges[srt], key)
    pos = np.minimum(pos, max(len(srt) - 1, 0))
    hit = key_edges[srt][pos] == key
    out = np.full(n - 1, w_min, dtype=np.float64)
    out[hit] = g.weights[srt][pos[hit]]
    return out


def chain_differences(c: ChainOrder, theta) -> np.ndarray:
    return np.diff(c.permute(theta))


def _ratio(num: float, den: float, what: str) -> float:
    if den == 0:
        if num > 0:
            raise EmbeddingViolation(f"{what}: chain value {num} but graph value 0")
        return 0.0
    return num / den


def verify_embedding(g: Graph, c: ChainOrder, theta, weighted: bool | None = None) -> tuple[float, float]:
    """Ratios of chain to graph total variation and of chain to graph cut
    count. For a DFS chain both are at most 2.

    ``weighted`` defaults to whether the graph carries non-unit weights; in
    the weighted case the chain steps are weighted as in
    :func:`induced_chain_weights`.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (g.n_nodes,):
        raise GraphError("signal length does not match graph")
    if weighted is None:
        weighted = g.is_weighted
    d_chain = chain_differences(c, theta)
    d_graph = theta[g.tails] - theta[g.heads]
    if weighted:
        wc = induced_chain_weights(g, c)
        wg = g.weights
    else:
        wc = np.ones(d_chain.size)
        wg = np.ones(d_graph.size)
    l1 = _ratio(float(wc @ np.abs(d_chain)), float(wg @ np.abs(d_graph)), "l1")
    l0 = _ratio(float(wc @ (d_chain != 0)), float(wg @ (d_graph != 0)), "l0")
    return l1, l0


def write_order(c: ChainOrder, path) -> None:
    Path(path).write_text("".join(f"{v}\n" for v in c.order.tolist()))


def read_order(path) -> ChainOrder:
    vals = [int(s) for s in Path(path).read_text().split()]
    return chain_from_order(vals)


def grid_with_snakes(rows: int, cols: int):
    g = grid_graph(rows, cols)
    return g, snake_orders(rows, cols, g)
