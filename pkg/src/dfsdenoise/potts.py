"""Exact 1d Potts segmentation and its DFS-chain extension to graphs.

Minimizes ``0.5 * ||y - theta||^2 + lam * #{i : theta[i+1] != theta[i]}`` by
the optimal-partition recursion over segment end points, O(n^2) time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numba

from .chain import ChainOrder
from .graph import Graph, GraphError

__all__ = ["Potts1DProblem", "PottsSolution", "solve_potts1d", "potts_objective",
           "potts_oracle", "dfs_potts"]

TIE_TOL = 1e-12


@dataclass(frozen=True)
class Potts1DProblem:
    y: np.ndarray
    lam: float

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if y.ndim != 1 or y.size < 1:
            raise ValueError("y must be a non-empty vector")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains NaN or Inf")
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class PottsSolution:
    theta: np.ndarray
    objective: float
    segments: list  # (start, end_exclusive, level)


def potts_objective(y, theta, lam: float) -> float:
    y = np.asarray(y, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    r = y - theta
    return float(0.5 * r @ r + lam * np.count_nonzero(np.diff(theta)))


@numba.njit(cache=True, nogil=True)
def _partition(y, lam, tie):
    n = y.shape[0]
    s1 = np.zeros(n + 1)
    s2 = np.zeros(n + 1)
    for i in range(n):
        s1[i + 1] = s1[i] + y[i]
        s2[i + 1] = s2[i] + y[i] * y[i]
    best = np.empty(n + 1)
    back = np.zeros(n + 1, dtype=np.int64)
    best[0] = -lam
    for i in range(1, n + 1):
        cur = np.inf
        arg = 0
        for j in range(i):
            m = i - j
            sse = s2[i] - s2[j] - (s1[i] - s1[j]) ** 2 / m
            if sse < 0.0:
                sse = 0.0
            c = best[j] + lam + 0.5 * sse
            # later split points win ties
            if c <= cur + tie:
                if c < cur:
                    cur = c
                arg = j
        best[i] = cur
        back[i] = arg
    return back


def solve_potts1d(p: Potts1DProblem, max_n: int = 100_000) -> PottsSolution:
    """Globally optimal piecewise-constant fit with ``lam`` per jump.

    Ties between split points (cost equal within 1e-12) are resolved in
    favour of the later split. ``max_n`` guards against accidental quadratic
    blowups; raise it explicitly for bigger inputs.
    """
    n = p.y.size
    if n > max_n:
        raise ValueError(f"n={n} exceeds max_n={max_n}; pass a larger max_n to proceed")
    # centering shrinks cancellation in the prefix-sum SSE
    centre = float(p.y.mean())
    back = _partition(p.y - centre, float(p.lam), TIE_TOL)
    bounds = []
    i = n
    while i > 0:
        j = int(back[i])
        bounds.append((j, i))
        i = j
    bounds.reverse()
    theta = np.empty(n)
    segments = []
    for j, i in bounds:
        level = float(p.y[j:i].mean())
        theta[j:i] = level
        segments.append((j, i, level))
    return PottsSolution(theta, potts_objective(p.y, theta, p.lam), segments)


def potts_oracle(y, lam: float, max_n: int = 16) -> float:
    """Optimal Potts objective by enumerating all ``2^(n-1)`` segmentations."""
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if n > max_n:
        raise ValueError(f"n={n} too large for exhaustive segmentation")
    if n == 1:
        return 0.0
    m = n - 1
    masks = np.arange(2**m, dtype=np.int64)
    cuts = ((masks[:, None] >> np.arange(m)) & 1).astype(bool)
    seg = np.zeros((masks.size, n), dtype=np.int64)
    seg[:, 1:] = np.cumsum(cuts, axis=1)
    lab = (seg + n * np.arange(masks.size)[:, None]).ravel()
    yy = np.tile(y, masks.size)
    cnt = np.bincount(lab, minlength=masks.size * n)
    tot = np.bincount(lab, weights=yy, minlength=masks.size * n)
    mean = tot / np.maximum(cnt, 1)
    r = (yy - mean[lab]).reshape(masks.size, n)
    obj = 0.5 * (r * r).sum(axis=1) + lam * cuts.sum(axis=1)
    return float(obj.min())


def dfs_potts(g: Graph, c: ChainOrder, y, lam: float, max_n: int = 100_000) -> np.ndarray:
    """Potts fit along the DFS chain, mapped back to graph node order."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (g.n_nodes,) or c.n_nodes != g.n_nodes:
        raise GraphError("signal, order and graph sizes disagree")
    sol = solve_potts1d(Potts1DProblem(c.permute(y), lam), max_n=max_n)
    return c.unpermute(sol.theta)
