import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from grvtest import DistanceMatrix, GramMatrix, gower_center
from grvtest.matrices import Metricity


def euclidean_dm(x: np.ndarray) -> DistanceMatrix:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return DistanceMatrix(squareform(pdist(x)), Metricity.METRIC)


def random_gram(rng: np.random.Generator, n: int, *, indefinite: bool = False) -> GramMatrix:
    """Centered symmetric matrix; PSD unless ``indefinite``."""
    if indefinite:
        a = rng.normal(size=(n, n))
        a = a + a.T
    else:
        x = rng.normal(size=(n, max(2, n // 2)))
        a = x @ x.T
    c = np.eye(n) - 1.0 / n
    return GramMatrix(c @ a @ c)


def random_semimetric(rng: np.random.Generator, n: int) -> DistanceMatrix:
    """Random dissimilarity without triangle-inequality guarantees."""
    d = rng.exponential(size=(n, n)) ** 3
    d = d + d.T
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d, Metricity.SEMI_METRIC)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


def gram_of(x: np.ndarray) -> GramMatrix:
    return gower_center(euclidean_dm(x))


# Acceptance criteria register a one-line verdict here; the lines are echoed
# in the terminal summary so they show up without ``-s``.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
