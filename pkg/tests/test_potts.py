import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dfsdenoise.chain import dfs_order, random_dfs_order, verify_embedding
from dfsdenoise.graph import from_edges, random_connected_graph
from dfsdenoise.potts import Potts1DProblem, dfs_potts, potts_oracle, solve_potts1d


def brute_force(y, lam):
    """Best objective over every set of cut positions, one cut set at a time."""
    n = y.size
    best = np.inf
    for k in range(n):
        for cuts in itertools.combinations(range(1, n), k):
            edges = (0, *cuts, n)
            sse = sum(((y[a:b] - y[a:b].mean()) ** 2).sum() for a, b in zip(edges, edges[1:]))
            best = min(best, 0.5 * sse + lam * k)
    return best


def test_matches_brute_force(rng):
    for _ in range(40):
        n = int(rng.integers(1, 10))
        y = rng.normal(size=n) + np.repeat(rng.normal(size=2) * 2, n)[:n]
        lam = float(rng.exponential(0.5))
        sol = solve_potts1d(Potts1DProblem(y, lam))
        ref = brute_force(y, lam)
        assert sol.objective - ref <= 1e-9
        assert abs(potts_oracle(y, lam) - ref) <= 1e-9


def test_lambda_zero_is_identity(rng):
    y = rng.normal(size=30)
    assert np.array_equal(solve_potts1d(Potts1DProblem(y, 0.0)).theta, y)


def test_large_lambda_single_segment(rng):
    y = rng.normal(size=25)
    lam = 0.5 * ((y - y.mean()) ** 2).sum() + 1e-6
    sol = solve_potts1d(Potts1DProblem(y, lam))
    assert len(sol.segments) == 1 and np.allclose(sol.theta, y.mean(), atol=1e-14)


def test_levels_are_segment_means(rng):
    y = np.concatenate([rng.normal(0, 0.1, 20), rng.normal(3, 0.1, 15), rng.normal(-1, 0.1, 10)])
    sol = solve_potts1d(Potts1DProblem(y, 0.5))
    assert [s[:2] for s in sol.segments] == [(0, 20), (20, 35), (35, 45)]
    for a, b, lev in sol.segments:
        assert lev == pytest.approx(y[a:b].mean(), rel=1e-12)


def test_tie_prefers_later_split():
    # splitting (0 | 1 1) and (0 0 | 1) cost the same on y = (0, 0.5, 1)
    sol = solve_potts1d(Potts1DProblem(np.array([0.0, 0.5, 1.0]), 0.1))
    assert [s[:2] for s in sol.segments] == [(0, 2), (2, 3)]


def test_size_guard():
    with pytest.raises(ValueError):
        solve_potts1d(Potts1DProblem(np.zeros(50), 1.0), max_n=10)


def test_dfs_potts_examples(rng):
    g = random_connected_graph(40, 30, seed=1)
    c = random_dfs_order(g, 2)
    assert np.allclose(dfs_potts(g, c, np.full(40, 1.5), 3.0), 1.5)
    y = rng.normal(size=40)
    assert np.array_equal(dfs_potts(g, c, y, 0.0), y)
    star = from_edges([(0, i) for i in range(1, 9)])
    y = np.r_[5.0, np.zeros(8)] + rng.normal(scale=0.01, size=9)
    th = dfs_potts(star, dfs_order(star, 0), y, 0.01)
    _, l0 = verify_embedding(star, dfs_order(star, 0), th)
    assert l0 <= 2


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_segment_count_non_increasing(n, seed):
    y = np.random.default_rng(seed).normal(size=n)
    counts = [len(solve_potts1d(Potts1DProblem(y, lam)).segments) for lam in np.geomspace(1e-3, 20, 12)]
    assert all(b <= a for a, b in zip(counts, counts[1:]))
