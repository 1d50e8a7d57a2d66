"""Shared fixtures; the expensive grids and constants are session-scoped."""

import pytest

from critheat.grid import make_grid
from critheat.ground_state import compute_constants


@pytest.fixture(scope="session")
def grid4():
    """Default production grid: d=4, graded, N=1024, R_max=100."""
    return make_grid(4, 100.0, 1024)


@pytest.fixture(scope="session")
def consts4(grid4):
    return compute_constants(grid4)


@pytest.fixture(scope="session")
def grid4_512():
    return make_grid(4, 100.0, 512)


@pytest.fixture(scope="session")
def consts4_512(grid4_512):
    return compute_constants(grid4_512)
