import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lifs.ambient import GridSpace
from lifs.ifs_core import Affine, Branch, LocalIFS, Whole
from lifs.scene import load_graph, load_ifs

settings.register_profile("lifs", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lifs")


@pytest.fixture(scope="session")
def cantor():
    return load_ifs("cantor.scene")


@pytest.fixture(scope="session")
def basins_ifs():
    return load_ifs("cantor_basins.scene")


@pytest.fixture(scope="session")
def edge2():
    return load_ifs("edge_cantor2.scene")


@pytest.fixture(scope="session")
def edge3():
    return load_ifs("edge_cantor3.scene")


@pytest.fixture(scope="session")
def symbolic():
    return load_ifs("symbolic_shift.scene")


@pytest.fixture(scope="session")
def two_vertex():
    return load_graph("gd_two_vertex.scene")


@pytest.fixture(scope="session")
def halves():
    """Full-domain system ``x/2, x/2 + 1/2`` on [0, 1]."""
    space = GridSpace(((0.0, 1.0),), 0.01)
    return LocalIFS(space, [Branch(Whole(), Affine([[0.5]], [0.0], 0.5)),
                            Branch(Whole(), Affine([[0.5]], [0.5], 0.5))])


def interval_cells(space, lo, hi):
    """Cells whose closed extent meets [lo, hi], by direct arithmetic on centers."""
    ids = np.arange(space.size)
    x = space.coords(ids)[:, 0]
    h = space.cell
    return ids[(x + h / 2 >= lo - 1e-12) & (x - h / 2 <= hi + 1e-12)]
