import numpy as np
import pytest

from qsv_toolkit.states import bell_state


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so randomized tests are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def bell():
    return bell_state()


@pytest.fixture
def graph_files(tmp_path):
    """Writes a 4-vertex path graph and a 2-coloring of it; returns (graph, coloring)."""
    graph = tmp_path / "path4.txt"
    graph.write_text("4\n1 2\n2 3\n3 4\n")
    coloring = tmp_path / "path4.col"
    coloring.write_text("1 1\n2 2\n3 1\n4 2\n")
    return graph, coloring
