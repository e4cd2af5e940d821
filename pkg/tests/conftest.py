import numpy as np
import pytest

from smoothgraph.graph_core import edge_count
from smoothgraph.toolkits import make_rng


@pytest.fixture
def rng():
    return make_rng(2024)


@pytest.fixture
def small_data(rng):
    """Eight nodes carrying five signals."""
    return rng.standard_normal((8, 5))


@pytest.fixture
def small_graph(rng):
    """Random weighted graph on eight nodes with roughly half of the edges present."""
    size = edge_count(8)
    w = rng.uniform(0.1, 1.0, size) * (rng.uniform(size=size) < 0.5)
    w[0] = 1.0
    return w


@pytest.fixture
def path_graph():
    """Unit-weight path 0 - 1 - 2 - 3."""
    return np.array([1.0, 0.0, 0.0, 1.0, 0.0, 1.0])
