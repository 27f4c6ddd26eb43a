import pytest

from sphereineq.grid import build_grid
from sphereineq.harmonics import build_basis


@pytest.fixture(scope="session")
def grid():
    return build_grid(48, 96)


@pytest.fixture(scope="session")
def basis(grid):
    return build_basis(grid, 24)


@pytest.fixture(scope="session")
def small_basis():
    return build_basis(build_grid(16, 32), 8)


@pytest.fixture(scope="session")
def zonal_basis():
    # axisymmetric fields concentrating near a -> 1 need a high band limit
    return build_basis(build_grid(200, 4), 160, zonal=True)
