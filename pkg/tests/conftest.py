import numpy as np
import pytest

from ugcn.caseio import load_case, to_grid_graph
from ugcn.grid import Branch, GridGraph


@pytest.fixture(scope="session")
def ieee33():
    return to_grid_graph(load_case("ieee33"))


@pytest.fixture(scope="session")
def ieee69():
    return to_grid_graph(load_case("ieee69"))


@pytest.fixture(scope="session")
def ieee30():
    return to_grid_graph(load_case("ieee30"), kind="transmission")


@pytest.fixture(scope="session")
def ieee39():
    return to_grid_graph(load_case("ieee39"), kind="transmission")


@pytest.fixture
def chain4():
    """1-2-3-4 feeder rooted at 1."""
    return GridGraph(
        bus_ids=(1, 2, 3, 4),
        branches=(
            Branch(1, 2, 0.01 + 0.02j),
            Branch(2, 3, 0.01 + 0.02j),
            Branch(3, 4, 0.01 + 0.02j),
        ),
        kind="distribution",
        root=1,
    )


def random_tree(n, seed, kind="distribution"):
    """Random labeled tree on buses 1..n with plausible feeder impedances."""
    rng = np.random.default_rng(seed)
    branches = []
    for k in range(2, n + 1):
        parent = int(rng.integers(1, k))
        z = complex(rng.uniform(0.005, 0.06), rng.uniform(0.005, 0.06))
        branches.append(Branch(parent, k, z))
    return GridGraph(bus_ids=tuple(range(1, n + 1)), branches=tuple(branches),
                     kind=kind, root=1 if kind == "distribution" else None)
