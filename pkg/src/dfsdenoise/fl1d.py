"""Exact 1d fused lasso with per-difference penalty weights.

Minimizes ``0.5 * ||y - theta||^2 + lam * sum_i w_i |theta[i+1] - theta[i]|``.

The solver is the linear-time dynamic program that passes piecewise-linear
derivative messages down the chain: the derivative of each message is the
previous one clipped to ``[-lam w_i, lam w_i]``, which only ever adds two
knots, so the knot buffer needs ``2n`` slots. Back-substitution then clips
each coordinate to the interval recorded on the forward pass.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import numba

__all__ = [
    "FL1DProblem",
    "FL1DSolution",
    "OracleRefused",
    "fl1d",
    "solve_fl1d",
    "solve_fl1d_oracle",
    "kkt_residual",
    "objective",
    "lambda_max",
]


class OracleRefused(ValueError):
    """Problem too large for exhaustive search."""


@dataclass(frozen=True)
class FL1DProblem:
    y: np.ndarray
    lam: float
    weights: np.ndarray | None = None

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if y.ndim != 1 or y.size < 1:
            raise ValueError("y must be a non-empty vector")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains NaN or Inf")
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        object.__setattr__(self, "y", y)
        if self.weights is not None:
            w = np.ascontiguousarray(self.weights, dtype=np.float64)
            if w.shape != (y.size - 1,):
                raise ValueError(f"weights must have length {y.size - 1}")
            if not np.all(w > 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite and strictly positive")
            object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.y.size

    def penalties(self) -> np.ndarray:
        """Effective penalty on each difference, ``lam * w_i``."""
        if self.weights is None:
            return np.full(self.n - 1, float(self.lam))
        return float(self.lam) * self.weights


@dataclass(frozen=True)
class FL1DSolution:
    theta: np.ndarray
    objective: float
    kkt_residual: float


def objective(p: FL1DProblem, theta) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    r = p.y - theta
    return float(0.5 * r @ r + p.penalties() @ np.abs(np.diff(theta)))


@numba.njit(cache=True, nogil=True)
def _dp(y, lam):
    n = y.shape[0]
    beta = np.empty(n)
    if n == 1 or np.all(lam == 0.0):
        # no fusion at all; skip the DP so the fit is exactly y
        beta[:] = y
        return beta

    x = np.empty(2 * n)
    a = np.empty(2 * n)
    b = np.empty(2 * n)
    tm = np.empty(n - 1)
    tp = np.empty(n - 1)

    # left knots carry increments of the derivative; right knots carry
    # increments of its negation, read from the right end
    lk = lam[0]
    tm[0] = y[0] - lk
    tp[0] = y[0] + lk
    l = n - 1
    r = n
    x[l] = tm[0]
    x[r] = tp[0]
    a[l] = 1.0
    b[l] = -y[0] + lk
    a[r] = -1.0
    b[r] = y[0] + lk
    afirst = 1.0
    bfirst = -y[1] - lk
    alast = -1.0
    blast = y[1] - lk

    for k in range(1, n - 1):
        lk = lam[k]
        alo = afirst
        blo = bfirst
        lo = l
        while lo <= r:
            if alo * x[lo] + blo > -lk:
                break
            alo += a[lo]
            blo += b[lo]
            lo += 1

        ahi = alast
        bhi = blast
        hi = r
        while hi >= lo:
            if -ahi * x[hi] - bhi < lk:
                break
            ahi += a[hi]
            bhi += b[hi]
            hi -= 1

        tm[k] = (-lk - blo) / alo
        l = lo - 1
        x[l] = tm[k]
        tp[k] = (lk + bhi) / (-ahi)
        r = hi + 1
        x[r] = tp[k]

        a[l] = alo
        b[l] = blo + lk
        a[r] = ahi
        b[r] = bhi + lk
        afirst = 1.0
        bfirst = -y[k + 1] - lk
        alast = -1.0
        blast = y[k + 1] - lk

    # root of the last derivative
    alo = afirst
    blo = bfirst
    for lo in range(l, r + 1):
        if alo * x[lo] + blo > 0:
            break
        alo += a[lo]
        blo += b[lo]
    beta[n - 1] = -blo / alo

    for k in range(n - 2, -1, -1):
        if beta[k + 1] > tp[k]:
            beta[k] = tp[k]
        elif beta[k + 1] < tm[k]:
            beta[k] = tm[k]
        else:
            beta[k] = beta[k + 1]
    return beta


def fl1d(y, lam: float, weights=None) -> np.ndarray:
    """Fitted vector only; validates inputs and runs the DP."""
    p = FL1DProblem(y, lam, weights)
    return _dp(p.y, p.penalties())


def solve_fl1d(p: FL1DProblem) -> FL1DSolution:
    theta = _dp(p.y, p.penalties())
    return FL1DSolution(theta, objective(p, theta), kkt_residual(p, theta))


def kkt_residual(p: FL1DProblem, theta, fuse_tol: float = 0.0) -> float:
    """Largest violation of the optimality conditions at ``theta``.

    The dual variable on difference ``i`` is ``u_i = sum_{j<=i} (y_j - theta_j)``.
    Optimality requires ``|u_i| <= lam w_i`` everywhere, ``u_i = -lam w_i *
    sign(theta[i+1] - theta[i])`` where the difference is nonzero, and a
    vanishing total ``u_{n-1}``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != p.y.shape:
        raise ValueError("theta and y differ in length")
    u = np.cumsum(p.y - theta)
    tail = abs(u[-1])
    if p.n == 1:
        return float(tail)
    pen = p.penalties()
    ue = u[:-1]
    d = np.diff(theta)
    box = np.maximum(np.abs(ue) - pen, 0.0)
    jump = np.abs(d) > fuse_tol
    edge = np.where(jump, np.abs(ue + pen * np.sign(d)), 0.0)
    return float(max(tail, box.max(), edge.max()))


def lambda_max(y, weights=None) -> float:
    """Smallest lambda at which the solution is the constant ``mean(y)``."""
    y = np.asarray(y, dtype=np.float64)
    if y.size < 2:
        return 0.0
    u = np.abs(np.cumsum(y - y.mean())[:-1])
    if weights is not None:
        u = u / np.asarray(weights, dtype=np.float64)
    return float(u.max())


# --------------------------------------------------------------------------
# exhaustive oracle

@lru_cache(maxsize=None)
def _sign_patterns(m: int) -> np.ndarray:
    return np.array(list(itertools.product((-1, 0, 1), repeat=m)), dtype=np.int8).reshape(-1, m)


def solve_fl1d_oracle(p: FL1DProblem, max_n: int = 14) -> FL1DSolution:
    """Minimizer by enumeration of all fuse/sign patterns of the differences.

    For a pattern (each difference fused, rising or falling) stationarity fixes
    the dual variable on every unfused difference at ``-/+ lam w_i``, which
    pins each constant block to
    ``(sum_B y - u_end + u_before) / |B|``. The true minimizer is one of these
    ``3^(n-1)`` candidates, so the candidate with the smallest objective wins.
    """
    n = p.n
    if n > max_n:
        raise OracleRefused(f"n={n} exceeds oracle limit {max_n}")
    if n == 1:
        return FL1DSolution(p.y.copy(), 0.0, 0.0)
    pats = _sign_patterns(n - 1)
    pen = p.penalties()
    npat = pats.shape[0]
    jump = pats != 0
    uext = np.zeros((npat, n + 1))
    uext[:, 1:n] = -pen * pats
    start = np.empty((npat, n), dtype=np.int64)
    end = np.empty((npat, n), dtype=np.int64)
    start[:, 0] = 0
    for j in range(1, n):
        start[:, j] = np.where(jump[:, j - 1], j, start[:, j - 1])
    end[:, n - 1] = n - 1
    for j in range(n - 2, -1, -1):
        end[:, j] = np.where(jump[:, j], j, end[:, j + 1])
    csum = np.concatenate([[0.0], np.cumsum(p.y)])
    rows = np.arange(npat)[:, None]
    theta = (csum[end + 1] - csum[start] - uext[rows, end + 1] + uext[rows, start]) / (end - start + 1)
    obj = 0.5 * ((p.y - theta) ** 2).sum(axis=1) + np.abs(np.diff(theta, axis=1)) @ pen
    best = int(np.argmin(obj))
    th = theta[best].copy()
    return FL1DSolution(th, objective(p, th), kkt_residual(p, th))
