"""Graph denoisers: DFS fused lasso and its averages, Laplacian smoothing and
spanning-tree wavelet thresholding."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .chain import ChainOrder, random_dfs_order
from .fl1d import FL1DProblem, _dp, kkt_residual, objective
from .graph import Graph, GraphError, Tree, dfs_spanning_tree
from .wavelets import WaveletBasis, build_tree_wavelets

__all__ = [
    "DenoiseResult",
    "ConvergenceError",
    "dfs_fused_lasso",
    "chain_fits",
    "multi_dfs_average",
    "derived_seeds",
    "laplacian_smoothing",
    "LaplacianSmoother",
    "wavelet_denoise",
    "soft_threshold",
    "build_tree_wavelets",
]


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass
class DenoiseResult:
    theta_hat: np.ndarray
    lam: float
    method: str
    diagnostics: dict = field(default_factory=dict)


def _signal(g_or_n, y) -> np.ndarray:
    n = g_or_n if isinstance(g_or_n, int) else g_or_n.n_nodes
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (n,):
        raise GraphError(f"signal has shape {y.shape}, expected ({n},)")
    if not np.all(np.isfinite(y)):
        raise ValueError("signal contains NaN or Inf")
    return y


def dfs_fused_lasso(g: Graph, c: ChainOrder, y, lam: float, use_weights: bool = False) -> DenoiseResult:
    """1d fused lasso on the chain-ordered data, mapped back to node order."""
    y = _signal(g, y)
    w = c.chain_weights if use_weights else None
    if use_weights and (w is None or w.size != max(g.n_nodes - 1, 0)):
        raise GraphError("chain order carries no induced weights")
    p = FL1DProblem(c.permute(y), lam, w)
    z = _dp(p.y, p.penalties())
    return DenoiseResult(c.unpermute(z), float(lam), "dfs",
                         {"objective": objective(p, z), "kkt_residual": kkt_residual(p, z)})


def chain_fits(chains, y, lam: float, workers: int = 1) -> np.ndarray:
    """Stack of DFS fused lasso fits, one row per chain."""
    y = np.asarray(y, dtype=np.float64)
    lam = float(lam)

    def fit(c):
        z = _dp(np.ascontiguousarray(y[c.order]), np.full(max(y.size - 1, 0), lam))
        return z[c.inverse]

    if workers > 1 and len(chains) > 1:
        with ThreadPoolExecutor(workers) as ex:
            return np.vstack(list(ex.map(fit, chains)))
    return np.vstack([fit(c) for c in chains])


def combine_fits(fits: np.ndarray, combine: str = "mean") -> np.ndarray:
    if combine == "mean":
        return fits.mean(axis=0)
    if combine == "median":
        return np.median(fits, axis=0)
    raise ValueError(f"combine must be 'mean' or 'median', got {combine!r}")


def derived_seeds(seed, k: int) -> list:
    """``k`` independent seeds spawned from one master seed; the first is the
    same whatever ``k`` is."""
    return [s.generate_state(2) for s in np.random.SeedSequence(seed).spawn(k)]


def multi_dfs_average(g: Graph, y, lam: float, K: int = 5, seeds=None, combine: str = "mean",
                      seed=None, workers: int = 1) -> DenoiseResult:
    """Combine ``K`` DFS fused lasso fits from independently seeded random DFS
    orders (random root, shuffled neighbors) by a per-node mean or median.

    ``seeds`` lists one seed per order; otherwise they are spawned from ``seed``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    y = _signal(g, y)
    if seeds is None:
        seeds = derived_seeds(seed, K)
    elif len(seeds) != K:
        raise ValueError(f"expected {K} seeds, got {len(seeds)}")
    chains = [random_dfs_order(g, s) for s in seeds]
    fits = chain_fits(chains, y, lam, workers)
    return DenoiseResult(combine_fits(fits, combine), float(lam), f"dfs-{combine}",
                         {"K": K, "seeds": list(seeds)})


class LaplacianSmoother:
    """Solves ``(I + 2 lam L) theta = y`` by Jacobi-preconditioned CG.

    The Laplacian and its diagonal are built once, so repeated calls over a
    lambda grid only pay for the iterations.
    """

    def __init__(self, g: Graph, weighted: bool = False):
        self.n = g.n_nodes
        self.L = g.laplacian(weighted)
        self.diag = self.L.diagonal()

    def __call__(self, y, lam: float, tol: float = 1e-8, max_iter: int | None = None) -> DenoiseResult:
        y = _signal(self.n, y)
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        if lam == 0:
            return DenoiseResult(y.copy(), 0.0, "laplacian", {"iterations": 0, "residual": 0.0})
        a = sparse.identity(self.n, format="csr") + (2.0 * lam) * self.L
        m = sparse.diags(1.0 / (1.0 + 2.0 * lam * self.diag))
        if max_iter is None:
            max_iter = 10 * self.n
        count = [0]

        def tick(_):
            count[0] += 1

        # aim a little below tol so the explicit residual check passes
        theta, info = splinalg.cg(a, y, rtol=0.5 * tol, atol=0.0, maxiter=max_iter, M=m, callback=tick)
        ynorm = np.linalg.norm(y)
        res = np.linalg.norm(a @ theta - y) / ynorm if ynorm > 0 else np.linalg.norm(theta)
        if res > tol:
            raise ConvergenceError(f"CG stopped after {count[0]} iterations (info={info})", res)
        return DenoiseResult(theta, float(lam), "laplacian", {"iterations": count[0], "residual": res})


def laplacian_smoothing(g: Graph, y, lam: float, tol: float = 1e-8, max_iter: int | None = None,
                        weighted: bool = False) -> DenoiseResult:
    """Minimizer of ``0.5 ||y - theta||^2 + lam theta^T L theta``."""
    g.require_connected()
    return LaplacianSmoother(g, weighted)(y, lam, tol, max_iter)


def soft_threshold(x, lam: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def wavelet_denoise(basis: WaveletBasis, y, lam: float) -> DenoiseResult:
    """Minimizer of ``0.5 ||y - theta||^2 + lam ||W theta||_1`` for orthonormal
    ``W``: soft-threshold the coefficients and transform back."""
    y = _signal(basis.n, y)
    coef = basis.forward(y)
    shrunk = soft_threshold(coef, lam)
    return DenoiseResult(basis.inverse(shrunk), float(lam), "wavelet",
                         {"nonzero": int(np.count_nonzero(shrunk))})


def spanning_tree_wavelets(g: Graph, tree: Tree | None = None) -> WaveletBasis:
    """Wavelet basis over ``tree`` (default: DFS spanning tree from node 0)."""
    return build_tree_wavelets(tree if tree is not None else dfs_spanning_tree(g))
