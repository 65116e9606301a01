import numpy as np
import pytest

from sgwave.spectral import Grid2


@pytest.fixture
def grid128():
    return Grid2(16.0, 128)


@pytest.fixture
def grid256():
    return Grid2(16.0, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
