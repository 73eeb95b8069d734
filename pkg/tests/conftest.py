import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from gss.services.builtin_graphs import G4_ORDER  # noqa: E402
from gss.services.graph_core import GridLayout, build_graph, cycle_from_order, rook_contiguity  # noqa: E402
from gss.services.populations import stylized_population  # noqa: E402


@pytest.fixture
def grid3():
    return GridLayout(3, 3)


@pytest.fixture
def rook3(grid3):
    return rook_contiguity(grid3)


@pytest.fixture
def g4():
    return cycle_from_order(G4_ORDER)


@pytest.fixture
def triangle():
    return build_graph(3, [(1, 2), (2, 3), (1, 3)])


@pytest.fixture
def centre_pop():
    return stylized_population("centre", 3, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20120)


def random_walkable_graph(rng: np.random.Generator, n_nodes: int, extra: int):
    """Random Hamiltonian cycle plus extra chords: connected, min degree 2"""
    perm = [int(v) + 1 for v in rng.permutation(n_nodes)]
    edges = [(perm[k], perm[(k + 1) % n_nodes]) for k in range(n_nodes)]
    for _ in range(extra):
        i, j = (int(v) + 1 for v in rng.choice(n_nodes, size=2, replace=False))
        edges.append((i, j))
    return build_graph(n_nodes, edges)
