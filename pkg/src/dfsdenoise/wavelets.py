"""Unbalanced Haar wavelets on a tree built around balancing vertices.

A balancing vertex of a subtree is one whose removal leaves components of at
most half the subtree's size. Each recursion step removes it, glues it onto
the smallest leftover component, and arranges the resulting pieces in a
binary hierarchy split by piece count (sizes balanced greedily inside that
constraint). Every internal node of the hierarchy contributes one Haar
contrast between its two halves; each piece is then decomposed recursively.
Splitting by count keeps the hierarchy depth at ``ceil(log2 degree)``, and
the balancing vertex keeps the recursion depth at ``ceil(log2 n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graph import GraphError, Tree, _bfs_alive

__all__ = ["WaveletBasis", "build_tree_wavelets", "haar_vector", "sparsity_bound"]


@dataclass(frozen=True, eq=False)
class WaveletBasis:
    """Orthonormal basis stored as the rows of a sparse ``n x n`` matrix.

    Row 0 is the constant vector; ``splits[r - 1]`` holds the two node sets
    contrasted by row ``r``.
    """

    matrix: sparse.csr_matrix
    splits: list

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def forward(self, theta) -> np.ndarray:
        return self.matrix @ np.asarray(theta, dtype=np.float64)

    def inverse(self, coef) -> np.ndarray:
        return self.matrix.T @ np.asarray(coef, dtype=np.float64)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def haar_vector(n_a: int, n_b: int) -> tuple[float, float]:
    """Values on the two sides of a unit-norm, zero-sum two-level contrast."""
    tot = n_a + n_b
    return math.sqrt(n_b / (n_a * tot)), -math.sqrt(n_a / (n_b * tot))


def _balancing_split(nodes: np.ndarray, g, alive: np.ndarray):
    """Balancing vertex of the subtree on ``nodes`` and its adjacent components."""
    p = nodes.size
    order, parent = _bfs_alive(g.indptr, g.indices, alive, int(nodes[0]))
    size = np.ones(alive.size, dtype=np.int64)
    biggest_child = np.zeros(alive.size, dtype=np.int64)
    for v in order[::-1].tolist():
        u = parent[v]
        if u >= 0:
            size[u] += size[v]
            if size[v] > biggest_child[u]:
                biggest_child[u] = size[v]
    worst = np.maximum(biggest_child[order], p - size[order])
    ok = order[2 * worst <= p]
    v = int(ok.min())
    # components of the subtree without v: one per neighbor of v inside it
    alive[v] = False
    comps = []
    for w in g.indices[g.indptr[v]:g.indptr[v + 1]].tolist():
        if alive[w]:
            comp, _ = _bfs_alive(g.indptr, g.indices, alive, w)
            comps.append(np.sort(comp))
    alive[v] = True
    return v, comps


def _split_items(items: list[np.ndarray]):
    """Two groups of near-equal count; sizes balanced largest-first."""
    k = len(items)
    cap = [(k + 1) // 2, k // 2]
    groups: list[list[np.ndarray]] = [[], []]
    load = [0, 0]
    for it in sorted(items, key=lambda a: -a.size):
        side = 0 if load[0] <= load[1] else 1
        if len(groups[side]) >= cap[side]:
            side = 1 - side
        groups[side].append(it)
        load[side] += it.size
    return groups


def build_tree_wavelets(t: Tree) -> WaveletBasis:
    g = t.graph
    n = g.n_nodes
    if n < 1 or g.n_edges != n - 1 or (n > 1 and not g.is_connected()):
        raise GraphError("wavelet construction needs a tree")
    rows, cols, vals = [0] * n, list(range(n)), [1.0 / math.sqrt(n)] * n
    splits = []
    alive = np.zeros(n, dtype=bool)
    work = [np.arange(n)]
    while work:
        nodes = work.pop()
        if nodes.size < 2:
            continue
        alive[nodes] = True
        v, comps = _balancing_split(nodes, g, alive)
        alive[nodes] = False
        if len(comps) == 1:
            items = [np.array([v]), comps[0]]
        else:
            j = min(range(len(comps)), key=lambda i: (comps[i].size, comps[i][0]))
            comps[j] = np.sort(np.append(comps[j], v))
            items = comps
        stack = [items]
        while stack:
            its = stack.pop()
            if len(its) == 1:
                work.append(its[0])
                continue
            ga, gb = _split_items(its)
            a = np.concatenate(ga)
            b = np.concatenate(gb)
            va, vb = haar_vector(a.size, b.size)
            r = len(splits) + 1
            splits.append((np.sort(a), np.sort(b)))
            rows += [r] * (a.size + b.size)
            cols += a.tolist() + b.tolist()
            vals += [va] * a.size + [vb] * b.size
            stack.append(gb)
            stack.append(ga)
    w = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return WaveletBasis(w, splits)


def sparsity_bound(n: int, d_max: int) -> int:
    """Multiplier ``ceil(log2 d_max) * ceil(log2 n)`` (with ``log2 d_max`` at
    least 1) relating wavelet sparsity to the cut count."""
    return max(1, math.ceil(math.log2(max(d_max, 1)))) * math.ceil(math.log2(max(n, 1)))
