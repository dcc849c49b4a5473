"""Synthetic piecewise-constant ground truths and Gaussian noise."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .graph import Graph, GraphError, Tree, _bfs, total_variation, tree_from_parents

__all__ = [
    "seeded_partition",
    "seeded_partition_signal",
    "grid_piecewise_signal",
    "natural_tv",
    "random_tree",
    "tree_piecewise_signal",
    "add_noise",
    "rescale_tv",
    "write_signal",
    "read_signal",
    "SignalSpec",
]


def natural_tv(n: int, scale: float = 1.0) -> float:
    """Total variation ``scale * sqrt(n)``, the natural size for 2d signals."""
    return scale * math.sqrt(n)


def rescale_tv(g: Graph, theta, target_tv: float) -> np.ndarray:
    """Stretch deviations from the mean so the total variation hits the target."""
    theta = np.asarray(theta, dtype=np.float64)
    tv = total_variation(g, theta)
    if target_tv < 0:
        raise ValueError("target total variation must be nonnegative")
    if tv == 0:
        if target_tv > 0:
            raise ValueError("cannot rescale a constant signal to positive total variation")
        return theta.copy()
    mu = theta.mean()
    return mu + (theta - mu) * (target_tv / tv)


def seeded_partition(g: Graph, parts: int, seed=None) -> np.ndarray:
    """Label nodes by grown balls around random seed nodes.

    Each round draws a seed uniformly from the unassigned nodes and claims the
    ``n // parts`` unassigned nodes nearest to it in hop distance (ties go by
    BFS discovery order). The last part takes whatever is left.
    """
    n = g.n_nodes
    if not 1 <= parts <= n:
        raise GraphError(f"parts must be in [1, {n}], got {parts}")
    rng = np.random.default_rng(seed)
    quota = n // parts
    label = np.full(n, parts - 1, dtype=np.int64)
    free = np.ones(n, dtype=bool)
    for p in range(parts - 1):
        cand = np.flatnonzero(free)
        root = int(cand[rng.integers(cand.size)])
        order, _ = _bfs(g.indptr, g.indices, root)
        take = order[free[order]][:quota]
        label[take] = p
        free[take] = False
    return label


def seeded_partition_signal(g: Graph, parts: int, target_tv: float, seed=None, levels=None) -> np.ndarray:
    """Piecewise constant over a :func:`seeded_partition`, scaled to ``target_tv``.

    Levels are standard normal draws unless given explicitly.
    """
    rng = np.random.default_rng(seed)
    label = seeded_partition(g, parts, rng)
    if levels is None:
        levels = rng.standard_normal(parts)
    levels = np.asarray(levels, dtype=np.float64)
    if levels.shape != (parts,):
        raise ValueError(f"need {parts} levels")
    return rescale_tv(g, levels[label], target_tv)


def _grid_tv(img: np.ndarray) -> float:
    return float(np.abs(np.diff(img, axis=0)).sum() + np.abs(np.diff(img, axis=1)).sum())


def grid_piecewise_signal(rows: int, cols: int, pieces: int, target_tv: float, seed=None,
                          rectangles=None) -> np.ndarray:
    """Row-major image of axis-aligned rectangles on a zero background.

    Rectangles are drawn in unit-square coordinates from ``seed`` (or passed
    as ``(top, left, bottom, right, level)`` tuples in the same coordinates),
    so one seed gives the same picture at every resolution. ``pieces - 1``
    rectangles are laid down in order, later ones on top.
    """
    if pieces < 1:
        raise ValueError("pieces must be at least 1")
    if rectangles is None:
        rng = np.random.default_rng(seed)
        rectangles = []
        for _ in range(pieces - 1):
            h, w = rng.uniform(0.15, 0.6, size=2)
            top, left = rng.uniform(0, 1 - h), rng.uniform(0, 1 - w)
            level = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
            rectangles.append((top, left, top + h, left + w, level))
    img = np.zeros((rows, cols))
    yc = (np.arange(rows) + 0.5) / rows
    xc = (np.arange(cols) + 0.5) / cols
    for top, left, bottom, right, level in rectangles:
        rr = (yc >= top) & (yc < bottom)
        cc = (xc >= left) & (xc < right)
        img[np.ix_(rr, cc)] = level
    tv = _grid_tv(img)
    if tv == 0:
        if target_tv > 0 and pieces > 1:
            raise ValueError("rectangles vanished at this resolution")
        return img.ravel()
    mu = img.mean()
    return (mu + (img - mu) * (target_tv / tv)).ravel()


def random_tree(n: int, min_children: int = 2, max_children: int = 10, seed=None) -> Tree:
    """Grow a tree breadth-first, giving each node a uniform number of children
    in ``[min_children, max_children]`` until ``n`` nodes exist."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    parent = np.full(n, -1, dtype=np.int64)
    nxt, head = 1, 0
    while nxt < n:
        k = int(rng.integers(min_children, max_children + 1))
        for _ in range(min(k, n - nxt)):
            parent[nxt] = head
            nxt += 1
        head += 1
    return tree_from_parents(parent, 0)


def tree_piecewise_signal(t: Tree, target_tv: float, sparsity: int, seed=None) -> np.ndarray:
    """Mean-zero signal with exactly ``sparsity`` nonzero tree differences.

    The differences live on randomly chosen tree edges; the signal is the
    cumulative sum of differences along root paths, centered, then scaled so
    its total variation equals ``target_tv``.
    """
    n = t.n_nodes
    if not 0 <= sparsity <= n - 1:
        raise ValueError(f"sparsity must be in [0, {n - 1}]")
    if sparsity == 0:
        if target_tv > 0:
            raise ValueError("a constant signal has zero total variation")
        return np.zeros(n)
    rng = np.random.default_rng(seed)
    children = np.flatnonzero(t.parent >= 0)
    diff = np.zeros(n)
    picked = rng.choice(children, size=sparsity, replace=False)
    mags = rng.uniform(0.5, 1.5, size=sparsity) * rng.choice([-1.0, 1.0], size=sparsity)
    diff[picked] = mags * (target_tv / np.abs(mags).sum())
    theta = np.zeros(n)
    for v in t.bfs_order()[1:].tolist():
        theta[v] = theta[t.parent[v]] + diff[v]
    return theta - theta.mean()


def add_noise(theta0, sigma: float, seed=None) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    theta0 = np.asarray(theta0, dtype=np.float64)
    return theta0 + np.random.default_rng(seed).normal(0.0, sigma, size=theta0.shape)


def write_signal(theta, path) -> None:
    Path(path).write_text("".join(f"{v!r}\n" for v in np.asarray(theta, dtype=float).tolist()))


def read_signal(path) -> np.ndarray:
    txt = Path(path).read_text().split()
    return np.array([float(s) for s in txt], dtype=np.float64)


SIGNAL_KINDS = ("seeded-partition", "grid-piecewise", "tree-piecewise")


class SignalSpec:
    """Recipe for a ground truth on a benchmark graph.

    ``tv`` fixes the total variation outright; otherwise it is
    ``tv_scale * sqrt(n)``.
    """

    def __init__(self, kind: str, *, parts: int = 10, pieces: int = 5, sparsity: int = 10,
                 tv: float | None = None, tv_scale: float = 1.0):
        if kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {kind!r}; choose from {', '.join(SIGNAL_KINDS)}")
        self.kind = kind
        self.parts, self.pieces, self.sparsity = parts, pieces, sparsity
        self.tv, self.tv_scale = tv, tv_scale

    def target_tv(self, n: int) -> float:
        return float(self.tv) if self.tv is not None else natural_tv(n, self.tv_scale)

    def make(self, case, seed=None) -> np.ndarray:
        n = case.graph.n_nodes
        tv = self.target_tv(n)
        if self.kind == "seeded-partition":
            return seeded_partition_signal(case.graph, self.parts, tv, seed)
        if self.kind == "grid-piecewise":
            if case.grid_shape is None:
                raise ValueError("grid-piecewise signals need a grid graph")
            return grid_piecewise_signal(*case.grid_shape, self.pieces, tv, seed)
        tree = case.tree
        if tree is None:
            raise ValueError("tree-piecewise signals need a tree graph")
        return tree_piecewise_signal(tree, tv, min(self.sparsity, n - 1), seed)

    def __repr__(self):
        return (f"SignalSpec({self.kind!r}, parts={self.parts}, pieces={self.pieces}, "
                f"sparsity={self.sparsity}, tv={self.tv}, tv_scale={self.tv_scale})")
