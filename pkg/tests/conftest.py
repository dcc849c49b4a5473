import numpy as np
import pytest

from dfsdenoise.graph import random_connected_graph
from dfsdenoise.signals import random_tree


def piecewise(rng, n, levels=4):
    """Random signal taking a handful of distinct values."""
    k = min(levels, n)
    return rng.normal(size=k)[rng.integers(k, size=n)]


def random_graph(rng, n_max=60, weighted=False):
    n = int(rng.integers(2, n_max + 1))
    extra = int(rng.integers(0, 2 * n))
    return random_connected_graph(n, extra, seed=rng.integers(2**32), weighted=weighted)


def random_small_tree(rng, n_max=64):
    n = int(rng.integers(1, n_max + 1))
    lo = int(rng.integers(1, 4))
    return random_tree(n, lo, lo + int(rng.integers(0, 8)), seed=rng.integers(2**32))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list = []


@pytest.fixture
def report_line():
    """Record one pass/fail line for an acceptance criterion."""
    def emit(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
