from __future__ import annotations

import numpy as np
import pytest

from semipert.funcspace import Grid
from semipert.perturbation import BoundaryFunctional


@pytest.fixture(scope="session")
def grid() -> Grid:
    """Default production grid."""
    return Grid(1.0, 4.0, 1.0 / 256.0)


@pytest.fixture(scope="session")
def coarse() -> Grid:
    """Small grid for cheap structural tests."""
    return Grid(1.0, 4.0, 1.0 / 32.0)


@pytest.fixture(scope="session")
def phi_uniform(grid) -> BoundaryFunctional:
    return BoundaryFunctional.uniform(grid, 2.0)


@pytest.fixture(scope="session")
def phi_uniform_coarse(coarse) -> BoundaryFunctional:
    return BoundaryFunctional.uniform(coarse, 2.0)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
