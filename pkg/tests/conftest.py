import numpy as np
import pytest

from tgopt.problems import laplacian_1d
from tgopt.smoothers import SmootherSpec, build_smoother

ACCEPTANCE_LINES = []


@pytest.fixture
def lap3():
    return laplacian_1d(3)


@pytest.fixture
def wj_half(lap3):
    """Weighted Jacobi with omega = 1/2 on the 3-point Laplacian, i.e. M = 4 I."""
    return build_smoother(SmootherSpec("WeightedJacobi", 0.5), lap3)


@pytest.fixture
def jacobi(lap3):
    return build_smoother(SmootherSpec("Jacobi"), lap3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def lap1d_eigs(n):
    """Analytic spectrum of the 1-D Laplacian, ascending."""
    k = np.arange(1, n + 1)
    return 4 * np.sin(k * np.pi / (2 * (n + 1))) ** 2


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
