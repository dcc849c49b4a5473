"""Undirected graphs, edge-difference metrics, spanning trees and tree algebra.

Graphs are stored as parallel edge arrays plus a CSR adjacency structure, so
that traversals can run in compiled loops. Node ids are always ``0..n-1``; the
ids read from a file are kept in :attr:`Graph.node_ids`.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import numba
from scipy import sparse
from scipy.sparse import csgraph

__all__ = [
    "Graph",
    "Tree",
    "GraphError",
    "load_edge_list",
    "from_edges",
    "grid_graph",
    "path_graph",
    "random_connected_graph",
    "random_geometric_graph",
    "largest_connected_component",
    "incidence_apply",
    "edge_differences",
    "total_variation",
    "cut_metric",
    "piece_count",
    "dfs_spanning_tree",
    "maximum_spanning_tree",
    "random_spanning_tree",
    "tree_from_parents",
    "tree_incidence_inverse",
    "tree_incidence_pinv_columns",
    "tree_partition",
]


class GraphError(ValueError):
    """Invalid graph input or a graph that violates a precondition."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph with nonnegative edge weights.

    Use :func:`from_edges` or :func:`load_edge_list` rather than the
    constructor; they normalize ids, drop self-loops and collapse duplicates.
    """

    n_nodes: int
    heads: np.ndarray  # int64, edge e joins heads[e] -- tails[e], heads < tails
    tails: np.ndarray
    weights: np.ndarray  # float64
    node_ids: np.ndarray  # original id of each node
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)  # neighbor of each adjacency slot
    edge_of: np.ndarray = field(repr=False)  # edge id of each adjacency slot

    @property
    def n_edges(self) -> int:
        return int(self.heads.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n_nodes else 0

    @property
    def is_weighted(self) -> bool:
        return bool(np.any(self.weights != 1.0))

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self):
        return list(zip(self.heads.tolist(), self.tails.tolist(), self.weights.tolist()))

    def has_edge(self, u: int, v: int) -> bool:
        return bool(np.any(self.neighbors(u) == v))

    def adjacency_matrix(self, weighted: bool = True) -> sparse.csr_matrix:
        data = self.weights if weighted else np.ones(self.n_edges)
        a = sparse.coo_matrix((data, (self.heads, self.tails)), shape=(self.n_nodes,) * 2)
        return (a + a.T).tocsr()

    def laplacian(self, weighted: bool = False) -> sparse.csr_matrix:
        """``L = D^T D`` with ``D`` the (optionally weighted) incidence matrix."""
        a = self.adjacency_matrix(weighted)
        deg = np.asarray(a.sum(axis=1)).ravel()
        return (sparse.diags(deg) - a).tocsr()

    def incidence_matrix(self) -> sparse.csr_matrix:
        m = self.n_edges
        rows = np.repeat(np.arange(m), 2)
        cols = np.column_stack([self.heads, self.tails]).ravel()
        vals = np.tile([-1.0, 1.0], m)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(m, self.n_nodes))

    def n_components(self) -> int:
        if self.n_nodes == 0:
            return 0
        k, _ = csgraph.connected_components(self.adjacency_matrix(False), directed=False)
        return int(k)

    def is_connected(self) -> bool:
        return self.n_nodes > 0 and self.n_components() == 1

    def require_connected(self) -> None:
        if not self.is_connected():
            raise GraphError("graph is not connected")


@dataclass(frozen=True, eq=False)
class Tree:
    """A spanning tree with a root and parent pointers (root's parent is -1)."""

    graph: Graph
    root: int
    parent: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    def edge_set(self) -> set:
        return {(min(u, v), max(u, v)) for u, v, _ in self.graph.edges()}

    def bfs_order(self) -> np.ndarray:
        """Nodes ordered so that every parent precedes its children."""
        return _bfs(self.graph.indptr, self.graph.indices, self.root)[0]

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for v, p in enumerate(self.parent.tolist()):
            if p >= 0:
                kids[p].append(v)
        return kids

    def depth(self) -> np.ndarray:
        d = np.zeros(self.n_nodes, dtype=np.int64)
        for v in self.bfs_order()[1:]:
            d[v] = d[self.parent[v]] + 1
        return d

    def subtree_sizes(self) -> np.ndarray:
        size = np.ones(self.n_nodes, dtype=np.int64)
        for v in self.bfs_order()[::-1]:
            p = self.parent[v]
            if p >= 0:
                size[p] += size[v]
        return size


# --------------------------------------------------------------------------
# construction

def _build(n: int, heads, tails, weights, node_ids=None) -> Graph:
    heads = np.asarray(heads, dtype=np.int64)
    tails = np.asarray(tails, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    m = heads.shape[0]
    src = np.concatenate([heads, tails])
    dst = np.concatenate([tails, heads])
    eid = np.concatenate([np.arange(m), np.arange(m)])
    # stable sort keeps input edge order within each adjacency list
    perm = np.argsort(src, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    if node_ids is None:
        node_ids = np.arange(n, dtype=np.int64)
    return Graph(n, heads, tails, weights, np.asarray(node_ids, dtype=np.int64),
                 indptr, dst[perm].astype(np.int64), eid[perm].astype(np.int64))


def from_edges(edges, n_nodes: int | None = None, weights=None, remap: bool = False) -> Graph:
    """Build a graph from ``(u, v)`` or ``(u, v, w)`` pairs.

    Self-loops are dropped and repeated edges collapsed, keeping the weight
    of the first occurrence. With ``remap`` the ids present in ``edges`` are
    relabelled to ``0..n-1`` in order of first appearance.
    """
    us, vs, ws = [], [], []
    for k, e in enumerate(edges):
        u, v = int(e[0]), int(e[1])
        w = float(e[2]) if len(e) > 2 else (1.0 if weights is None else float(weights[k]))
        us.append(u)
        vs.append(v)
        ws.append(w)
    if any(w < 0 or not math.isfinite(w) for w in ws):
        raise GraphError("edge weights must be finite and nonnegative")
    if remap:
        ids: dict[int, int] = {}
        for u, v in zip(us, vs):
            ids.setdefault(u, len(ids))
            ids.setdefault(v, len(ids))
        us = [ids[u] for u in us]
        vs = [ids[v] for v in vs]
        node_ids = np.fromiter(ids.keys(), dtype=np.int64, count=len(ids))
        n = len(ids)
    else:
        n = n_nodes if n_nodes is not None else (max(us + vs) + 1 if us else 0)
        node_ids = None
        if us and (min(us + vs) < 0 or max(us + vs) >= n):
            raise GraphError("edge endpoint out of range")
    seen: set = set()
    heads, tails, wts = [], [], []
    for u, v, w in zip(us, vs, ws):
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        if key in seen:
            continue
        seen.add(key)
        heads.append(key[0])
        tails.append(key[1])
        wts.append(w)
    return _build(n, heads, tails, wts, node_ids)


def load_edge_list(path, weighted: bool = False) -> Graph:
    """Read a whitespace separated ``u v [w]`` edge list (SNAP style).

    Lines starting with ``#`` and blank lines are skipped. Ids may be any
    nonnegative integers; they are remapped to ``0..n-1`` in order of first
    appearance and the originals kept in ``node_ids``.
    """
    path = Path(path)
    edges = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) not in (2, 3):
                raise GraphError(f"{path}:{lineno}: expected 'u v [w]', got {s!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if (weighted and len(parts) == 3) else 1.0
            except ValueError:
                raise GraphError(f"{path}:{lineno}: cannot parse {s!r}") from None
            if u < 0 or v < 0:
                raise GraphError(f"{path}:{lineno}: negative node id")
            if w < 0:
                raise GraphError(f"{path}:{lineno}: negative weight {w}")
            edges.append((u, v, w))
    if not edges:
        raise GraphError(f"{path}: no edges")
    return from_edges(edges, remap=True)


def path_graph(n: int, weights=None) -> Graph:
    edges = [(i, i + 1) for i in range(n - 1)]
    return from_edges(edges, n_nodes=n, weights=weights)


def grid_graph(rows: int, cols: int) -> Graph:
    """2d lattice with row-major ids ``r * cols + c``."""
    ids = np.arange(rows * cols).reshape(rows, cols)
    h = np.column_stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()])
    v = np.column_stack([ids[:-1, :].ravel(), ids[1:, :].ravel()])
    e = np.vstack([h, v])
    return _build(rows * cols, e[:, 0], e[:, 1], np.ones(len(e)))


def random_connected_graph(n: int, extra_edges: int = 0, seed=None, weighted: bool = False) -> Graph:
    """Random spanning tree (random recursive attachment) plus random chords."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    edges = []
    for i in range(1, n):
        edges.append((int(perm[i]), int(perm[rng.integers(i)])))
    for _ in range(extra_edges):
        u, v = rng.integers(n, size=2)
        edges.append((int(u), int(v)))
    w = rng.uniform(0.1, 3.0, size=len(edges)) if weighted else None
    return from_edges(edges, n_nodes=n, weights=w)


def random_geometric_graph(n: int, k: int = 3, seed=None) -> Graph:
    """k-nearest-neighbour graph on uniform points in the unit square.

    Sparse and nearly planar, a rough stand-in for a road network. The largest
    connected component is returned.
    """
    from scipy.spatial import cKDTree

    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    _, nbr = cKDTree(pts).query(pts, k=k + 1)
    u = np.repeat(np.arange(n), k)
    v = nbr[:, 1:].ravel()
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    key = np.unique(lo * n + hi)
    g = _build(n, key // n, key % n, np.ones(len(key)))
    return largest_connected_component(g)


def subgraph(g: Graph, nodes) -> Graph:
    """Induced subgraph on ``nodes`` (sorted), ids compacted."""
    nodes = np.sort(np.asarray(nodes, dtype=np.int64))
    new = np.full(g.n_nodes, -1, dtype=np.int64)
    new[nodes] = np.arange(nodes.size)
    keep = (new[g.heads] >= 0) & (new[g.tails] >= 0)
    return _build(nodes.size, new[g.heads[keep]], new[g.tails[keep]],
                  g.weights[keep], g.node_ids[nodes])


def largest_connected_component(g: Graph) -> Graph:
    """Induced subgraph on the biggest component.

    Ties go to the component holding the smallest original node id.
    """
    if g.n_nodes == 0:
        raise GraphError("empty graph")
    _, labels = csgraph.connected_components(g.adjacency_matrix(False), directed=False)
    sizes = np.bincount(labels)
    best = sizes.max()
    cands = np.flatnonzero(sizes == best)
    if cands.size > 1:
        smallest = [g.node_ids[labels == c].min() for c in cands]
        comp = cands[int(np.argmin(smallest))]
    else:
        comp = cands[0]
    nodes = np.flatnonzero(labels == comp)
    if nodes.size == g.n_nodes:
        return g
    return subgraph(g, nodes)


# --------------------------------------------------------------------------
# metrics over edge differences

def _check_signal(g: Graph, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (g.n_nodes,):
        raise GraphError(f"signal has shape {theta.shape}, graph has {g.n_nodes} nodes")
    return theta


def incidence_apply(g: Graph, theta) -> np.ndarray:
    """``theta[tails] - theta[heads]`` for every edge, i.e. the incidence operator."""
    theta = _check_signal(g, theta)
    return theta[g.tails] - theta[g.heads]


edge_differences = incidence_apply


def total_variation(g: Graph, theta, weighted: bool = False) -> float:
    d = np.abs(incidence_apply(g, theta))
    if weighted:
        d = d * g.weights
    return float(d.sum())


def cut_metric(g: Graph, theta, tol: float = 0.0) -> int:
    return int(np.count_nonzero(np.abs(incidence_apply(g, theta)) > tol))


def piece_count(g: Graph, theta, tol: float = 0.0) -> int:
    """Number of connected pieces on which ``theta`` is constant."""
    flat = np.abs(incidence_apply(g, theta)) <= tol
    a = sparse.coo_matrix((np.ones(flat.sum()), (g.heads[flat], g.tails[flat])),
                          shape=(g.n_nodes,) * 2)
    k, _ = csgraph.connected_components(a, directed=False)
    return int(k)


# --------------------------------------------------------------------------
# traversal kernels

@numba.njit(cache=True)
def _bfs(indptr, indices, root):
    n = indptr.shape[0] - 1
    order = np.empty(n, dtype=np.int64)
    parent = np.full(n, -2, dtype=np.int64)
    parent[root] = -1
    order[0] = root
    head, tail = 0, 1
    while head < tail:
        v = order[head]
        head += 1
        for s in range(indptr[v], indptr[v + 1]):
            w = indices[s]
            if parent[w] == -2:
                parent[w] = v
                order[tail] = w
                tail += 1
    return order[:tail], parent


@numba.njit(cache=True)
def _dfs(indptr, indices, root):
    """Iterative DFS; returns first-visit order, parent array, edge-walk count.

    The walk count is the number of times the traversal moves along a tree
    edge (down or back up); it is ``2 * (visited - 1)``.
    """
    n = indptr.shape[0] - 1
    order = np.empty(n, dtype=np.int64)
    parent = np.full(n, -2, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    cursor = indptr[:-1].copy()
    parent[root] = -1
    order[0] = root
    stack[0] = root
    top, k, walks = 1, 1, 0
    while top > 0:
        v = stack[top - 1]
        if cursor[v] < indptr[v + 1]:
            w = indices[cursor[v]]
            cursor[v] += 1
            if parent[w] == -2:
                parent[w] = v
                order[k] = w
                k += 1
                stack[top] = w
                top += 1
                walks += 1
        else:
            top -= 1
            if top > 0:
                walks += 1
    return order[:k], parent, walks


def shuffled_adjacency(g: Graph, seed) -> np.ndarray:
    """Adjacency ``indices`` with each node's neighbor list randomly permuted."""
    rng = np.random.default_rng(seed)
    rows = np.repeat(np.arange(g.n_nodes), g.degrees)
    perm = np.lexsort((rng.random(g.indices.size), rows))
    return g.indices[perm]


def _traverse(g: Graph, root: int, edge_order="input", seed=None):
    if not 0 <= root < g.n_nodes:
        raise GraphError(f"root {root} out of range")
    if edge_order == "input":
        indices = g.indices
    elif edge_order == "random":
        indices = shuffled_adjacency(g, seed)
    else:
        raise ValueError(f"edge_order must be 'input' or 'random', got {edge_order!r}")
    order, parent, walks = _dfs(g.indptr, indices, root)
    if order.size != g.n_nodes:
        raise GraphError("graph is not connected")
    return order, parent, walks


# --------------------------------------------------------------------------
# spanning trees

def tree_from_parents(parent, root: int, weights=None, node_ids=None) -> Tree:
    parent = np.asarray(parent, dtype=np.int64)
    n = parent.size
    child = np.flatnonzero(parent >= 0)
    if child.size != n - 1 or parent[root] != -1:
        raise GraphError("parent array does not describe a rooted tree")
    p = parent[child]
    w = np.ones(child.size) if weights is None else np.asarray(weights, dtype=float)
    g = _build(n, np.minimum(p, child), np.maximum(p, child), w, node_ids)
    if n > 1 and not g.is_connected():
        raise GraphError("parent array contains a cycle")
    return Tree(g, int(root), parent)


def _edge_weight_lookup(g: Graph, parent: np.ndarray) -> np.ndarray:
    child = np.flatnonzero(parent >= 0)
    w = np.empty(child.size)
    for k, c in enumerate(child.tolist()):
        p = parent[c]
        lo, hi = g.indptr[c], g.indptr[c + 1]
        slot = lo + int(np.flatnonzero(g.indices[lo:hi] == p)[0])
        w[k] = g.weights[g.edge_of[slot]]
    return w


def dfs_spanning_tree(g: Graph, root: int = 0, edge_order="input", seed=None) -> Tree:
    """Tree of DFS discovery edges, rooted at ``root``."""
    _, parent, _ = _traverse(g, root, edge_order, seed)
    return tree_from_parents(parent, root, _edge_weight_lookup(g, parent), g.node_ids)


class _DisjointSet:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, a):
        p = self.p
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.p[rb] = ra
        return True


def _kruskal(g: Graph, keys: np.ndarray, root: int) -> Tree:
    g.require_connected()
    # ascending key, ties by edge index
    order = np.lexsort((np.arange(g.n_edges), keys))
    ds = _DisjointSet(g.n_nodes)
    chosen = [e for e in order.tolist() if ds.union(int(g.heads[e]), int(g.tails[e]))]
    chosen = np.sort(np.asarray(chosen, dtype=np.int64))
    t = _build(g.n_nodes, g.heads[chosen], g.tails[chosen], g.weights[chosen], g.node_ids)
    _, parent = _bfs(t.indptr, t.indices, root)
    return Tree(t, root, parent)


def maximum_spanning_tree(g: Graph, root: int = 0) -> Tree:
    """Kruskal on negated weights; equal weights resolved by edge input index."""
    return _kruskal(g, -g.weights, root)


def random_spanning_tree(g: Graph, seed=None, root: int = 0) -> Tree:
    """Minimum spanning tree under i.i.d. uniform random edge keys."""
    rng = np.random.default_rng(seed)
    return _kruskal(g, rng.random(g.n_edges), root)


# --------------------------------------------------------------------------
# tree linear algebra

def _rooted_at_zero(t: Tree) -> None:
    if t.root != 0 or t.parent[0] != -1:
        raise GraphError("tree must be rooted at node 0")
    if np.count_nonzero(t.parent < 0) != 1:
        raise GraphError("invalid parent map")


def tree_incidence_inverse(t: Tree) -> np.ndarray:
    """Inverse of the incidence matrix augmented by ``e_0``.

    Entry ``(i, j)`` is 1 exactly when ``j`` lies on the path from the root to
    ``i``. The row of the incidence matrix belonging to node ``i > 0`` is
    ``e_i - e_parent(i)``.
    """
    _rooted_at_zero(t)
    n = t.n_nodes
    a = np.zeros((n, n), dtype=np.int64)
    for v in t.bfs_order().tolist():
        p = t.parent[v]
        if p >= 0:
            a[v] = a[p]
        a[v, v] = 1
    return a


def augmented_incidence(t: Tree) -> np.ndarray:
    """``[e_0^T; D_T]`` with row ``i`` equal to ``e_i - e_parent(i)`` for ``i > 0``."""
    _rooted_at_zero(t)
    n = t.n_nodes
    b = np.zeros((n, n), dtype=np.int64)
    b[0, 0] = 1
    for i in range(1, n):
        b[i, i] = 1
        b[i, t.parent[i]] = -1
    return b


def tree_incidence_pinv_columns(t: Tree) -> np.ndarray:
    """Pseudoinverse of the tree incidence matrix, built from the path matrix.

    Column ``i - 1`` maps the difference vector ``e_i`` (edge to the parent of
    node ``i``) to the mean-zero signal solving ``D_T x = e_i``.
    """
    a = tree_incidence_inverse(t).astype(np.float64)[:, 1:]
    return a - a.mean(axis=0, keepdims=True)


def tree_partition(t: Tree, k: int) -> list[np.ndarray]:
    """Split a tree into connected parts each holding at least ``k`` nodes.

    Repeatedly cut off the smallest subtree (separable by removing one edge)
    that has at least ``k`` nodes, until at most ``k`` nodes remain; the
    remainder joins the last part. Every part then has between ``k`` and
    ``k * (d_max + 1)`` nodes, and parts are joined by ``m - 1`` tree edges.
    """
    n = t.n_nodes
    if not 1 <= k <= n:
        raise GraphError(f"k must lie in [1, {n}], got {k}")
    g = t.graph
    alive = np.ones(n, dtype=bool)
    remaining = n
    parts: list[np.ndarray] = []
    while remaining > k:
        root = int(np.flatnonzero(alive)[0])
        order, parent = _bfs_alive(g.indptr, g.indices, alive, root)
        size = np.ones(n, dtype=np.int64)
        for v in order[::-1].tolist():
            p = parent[v]
            if p >= 0:
                size[p] += size[v]
        best, best_node, below = remaining + 1, -1, True
        for v in order[1:].tolist():
            s_below, s_above = int(size[v]), remaining - int(size[v])
            if k <= s_below < best:
                best, best_node, below = s_below, v, True
            if k <= s_above < best:
                best, best_node, below = s_above, v, False
        mark = np.zeros(n, dtype=bool)
        # nodes hanging below best_node, found by walking the BFS order
        mark[best_node] = True
        for v in order.tolist():
            p = parent[v]
            if p >= 0 and mark[p]:
                mark[v] = True
        if not below:
            mark = alive & ~mark
        parts.append(np.flatnonzero(mark))
        alive &= ~mark
        remaining -= best
    if not parts:
        return [np.arange(n)]
    if remaining:
        parts[-1] = np.sort(np.concatenate([parts[-1], np.flatnonzero(alive)]))
    return parts


def _bfs_alive(indptr, indices, alive, root):
    n = alive.size
    parent = np.full(n, -2, dtype=np.int64)
    parent[root] = -1
    order = [root]
    q = deque([root])
    while q:
        v = q.popleft()
        for w in indices[indptr[v]:indptr[v + 1]].tolist():
            if alive[w] and parent[w] == -2:
                parent[w] = v
                order.append(w)
                q.append(w)
    return np.asarray(order, dtype=np.int64), parent
