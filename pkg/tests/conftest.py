import itertools

import numpy as np
import pytest

from ldpclass.core import GridSpec


def brute_nearest(x, grid: GridSpec):
    """Exhaustive Euclidean argmin over every grid cell; first (lowest lexicographic) wins ties."""
    best, best_j = np.inf, None
    for j in itertools.product(range(grid.size), repeat=grid.d):
        dist = float(np.sum((np.asarray(x) - np.asarray(j) * grid.h) ** 2))
        if dist < best:
            best, best_j = dist, j
    return best_j


def brute_indicator(x, grid: GridSpec):
    """Scan all cells and keep those with ``max_k |x_k - j_k h| < h``."""
    cells = []
    for k, j in enumerate(itertools.product(range(grid.size), repeat=grid.d)):
        if np.max(np.abs(np.asarray(x) - np.asarray(j) * grid.h)) < grid.h:
            cells.append(k)
    return tuple(cells)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the line is printed in the terminal summary and then asserted."""

    def record(k: int, ok: bool, detail: str):
        _ACCEPTANCE.append((k, ok, detail))
        assert ok, f"criterion {k}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
