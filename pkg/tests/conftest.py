from typing import List

import pytest

from graph_core import Graph, build_graph
from limits import cycle_graph, path_graph, random_bounded_graph


@pytest.fixture
def c3() -> Graph:
    return cycle_graph(3)


@pytest.fixture
def c4() -> Graph:
    return cycle_graph(4)


@pytest.fixture
def c6() -> Graph:
    return cycle_graph(6)


@pytest.fixture
def p3() -> Graph:
    return path_graph(3)


@pytest.fixture
def p4() -> Graph:
    return path_graph(4)


@pytest.fixture
def k4() -> Graph:
    return build_graph(4, [(u, v) for u in range(4) for v in range(u + 1, 4)])


@pytest.fixture
def triangle_pendant() -> Graph:
    # triangle 0-1-2 with a pendant vertex 3 hanging off 0
    return build_graph(4, [(0, 1), (1, 2), (0, 2), (0, 3)])


@pytest.fixture
def random_graphs() -> List[Graph]:
    return [random_bounded_graph(6 + k % 4, 2 + k % 3, seed=100 + k) for k in range(8)]
