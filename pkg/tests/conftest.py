import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def three_cluster_points(n, f, eps):
    return np.array([[-1.0]] * f + [[0.0]] * (n - 2 * f) + [[1.0 - eps]] * f)


@pytest.fixture
def three_cluster_cloud():
    """n=7, f=2: two points at -e, three at 0, two at (1 - 1e-6) e."""
    return three_cluster_points(7, 2, 1e-6)


@pytest.fixture
def krum_even_cloud():
    """n=4: one point at e, three at 0."""
    return np.array([[1.0], [0.0], [0.0], [0.0]])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
