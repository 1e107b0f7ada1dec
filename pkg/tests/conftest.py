import numpy as np
import pytest

from shpsd import StftConfig, default_geometry


@pytest.fixture(scope="session")
def geom():
    return default_geometry()


@pytest.fixture(scope="session")
def stft_cfg():
    return StftConfig()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
