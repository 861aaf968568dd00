import numpy as np
import pytest

from parweight import weights
from parweight.dyadic import build_adjacent
from parweight.pargeo import SpaceTimeGrid, cylinder_family, rectangle_family
from parweight.space import euclidean_grid

GAMMA = 0.25


@pytest.fixture(scope="session")
def space():
    return euclidean_grid(1, 1.0, 16)


@pytest.fixture(scope="session")
def adj(space):
    return build_adjacent(space)


@pytest.fixture(scope="session")
def grid(space):
    return SpaceTimeGrid(space, 0.0, 1.0 / 64, 64, 2.0)


@pytest.fixture(scope="session")
def rect_fam(grid, adj):
    return rectangle_family(grid, adj, GAMMA, k_values=[1, 2])


@pytest.fixture(scope="session")
def cyl_fam(grid):
    return cylinder_family(grid, GAMMA)


@pytest.fixture(scope="session")
def exp_weight(grid):
    return weights.exp_time(grid, 1.0)


@pytest.fixture(scope="session")
def fine():
    """Refined 32 x 128 grid for stability comparisons."""
    sp = euclidean_grid(1, 1.0, 32)
    g = SpaceTimeGrid(sp, 0.0, 1.0 / 128, 128, 2.0)
    a = build_adjacent(sp)
    fam = rectangle_family(g, a, GAMMA, k_values=[1, 2], time_stride=2)
    return g, a, fam


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
