import numpy as np
import pytest

from lamecouple.bem import BoundarySpace, assemble_layer_matrices
from lamecouple.fem import FemSpace
from lamecouple.mesh import lshape, scale_to_unit, unit_square


class Level:
    """Scaled mesh with its spaces and layer matrices."""

    def __init__(self, mesh0, lam_ext=1.0, mu_ext=1.0):
        self.mesh0 = mesh0
        self.mesh, self.rec = scale_to_unit(mesh0)
        self.sp = FemSpace(self.mesh)
        self.bs = BoundarySpace(self.mesh)
        self.layers = assemble_layer_matrices(self.bs, lam_ext, mu_ext)


_CACHE = {}


def level(geom: str, h: float) -> Level:
    key = (geom, h)
    if key not in _CACHE:
        _CACHE[key] = Level(unit_square(h) if geom == "square" else lshape(h))
    return _CACHE[key]


@pytest.fixture
def square8():
    return level("square", 1 / 8)


@pytest.fixture
def square4():
    return level("square", 1 / 4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
