import numpy as np
import pytest

from conefix import NormedSpace, PolyhedralCone, orthant


@pytest.fixture
def orthant2_inf():
    return orthant(NormedSpace(2, "infinity"))


@pytest.fixture
def orthant2_two():
    return orthant(NormedSpace(2, "two"))


@pytest.fixture
def orthant3_inf():
    return orthant(NormedSpace(3, "infinity"))


@pytest.fixture
def halfline():
    space = NormedSpace(1, "two")
    return PolyhedralCone(space, [[1.0]], [[1.0]], normal_constant=1.0)


def random_nonneg_matrix(rng, p, scale=1.0):
    return rng.uniform(0.0, scale, (p, p))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
