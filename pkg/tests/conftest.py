import numpy as np
import pytest

from partcl.problems import (HotelConfig, build_grid, build_hotel,
                             build_training_plan)


@pytest.fixture(scope="session")
def grid():
    return build_grid()


@pytest.fixture(scope="session")
def training():
    return build_training_plan()


@pytest.fixture(scope="session")
def hotel():
    return build_hotel()


@pytest.fixture(scope="session")
def hotel_reduced():
    return build_hotel(HotelConfig.reduced())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def checkerboard(model):
    """Grid configuration with alternating cell values."""
    cells = model.metadata["cells"]
    values = []
    for v in model.variables:
        r, c = cells[v.name]
        values.append((r + c) % 2)
    return tuple(values)
