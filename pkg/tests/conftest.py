import numpy as np
import pytest

from tmlog import extremal_solver as es
from tmlog.function_space import make_interval_grid
from tmlog.growth_models import power


@pytest.fixture(scope="session")
def square():
    return power(2)


@pytest.fixture(scope="session")
def maximizer(square):
    """Fixed-seed ascent run for G(s) = s^2 on 257 nodes of [-1, 1]."""
    grid = make_interval_grid(257, 1.0)
    return es.maximize(square, grid, es.SolverOptions(seed=7))


def random_nonneg(rng, grid, bumps=3):
    x = grid.nodes
    v = np.zeros_like(x)
    for _ in range(bumps):
        c, w, a = rng.uniform(-0.6, 0.6), rng.uniform(0.1, 0.4), rng.uniform(0.2, 1.0)
        v += a * np.maximum(0.0, 1.0 - np.abs(x - c) / w)
    v += 0.1 * rng.uniform(0, 1, x.size) * (v > 0)
    v[0] = v[-1] = 0.0
    return v


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.SUMMARY:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.SUMMARY):
        terminalreporter.write_line(mod.SUMMARY[k])
