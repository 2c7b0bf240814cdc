# conftest.py

import sys
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from models import WeightedGraph  # noqa: E402


def graph_from_nx(g: nx.Graph, vertex_cost=None, vertex_weight=None) -> WeightedGraph:
    g = nx.convert_node_labels_to_integers(g)
    edges = list(g.edges())
    rows = [i for i, _ in edges]
    cols = [j for _, j in edges]
    weights = [g.edges[e].get("weight", 1.0) for e in edges]
    return WeightedGraph.from_edges(
        g.number_of_nodes(), rows, cols, weights, vertex_cost=vertex_cost, vertex_weight=vertex_weight
    )


def path_graph(n: int) -> WeightedGraph:
    return WeightedGraph.from_edges(n, list(range(n - 1)), list(range(1, n)))


def random_graph(n: int, p: float, seed: int) -> WeightedGraph:
    return graph_from_nx(nx.gnp_random_graph(n, p, seed=seed))


@pytest.fixture
def p3() -> WeightedGraph:
    return path_graph(3)


@pytest.fixture
def p4() -> WeightedGraph:
    return path_graph(4)


@pytest.fixture
def triangle() -> WeightedGraph:
    return WeightedGraph.from_edges(3, [0, 0, 1], [1, 2, 2])


@pytest.fixture
def star() -> WeightedGraph:
    return WeightedGraph.from_edges(5, [0, 0, 0, 0], [1, 2, 3, 4])


@pytest.fixture
def cycle4() -> WeightedGraph:
    return WeightedGraph.from_edges(4, [0, 1, 2, 3], [1, 2, 3, 0])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
