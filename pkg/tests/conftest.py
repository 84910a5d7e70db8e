import numpy as np
import pytest

from schfem import assemble, build_rect_mesh


@pytest.fixture(scope="session")
def mesh8():
    return build_rect_mesh(8, 8)


@pytest.fixture(scope="session")
def ops8(mesh8):
    return assemble(mesh8)


@pytest.fixture(scope="session")
def mesh16():
    return build_rect_mesh(16, 16)


@pytest.fixture(scope="session")
def ops16(mesh16):
    return assemble(mesh16)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240501)


def mean_zero(values, ops):
    """Project a coefficient vector onto zero L2 mean."""
    return values - ops.l2_mean(values)
