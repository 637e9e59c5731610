import numpy as np
import pytest

from polarsim import polar
from polarsim.crc import CrcSpec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def code_8_4():
    return polar.construct_code(8, 4, 0, 2.0)


@pytest.fixture(scope="session")
def code_16_8():
    return polar.construct_code(16, 8, 0, 2.0)


@pytest.fixture(scope="session")
def code_64():
    return polar.construct_code(64, 26, 6, 2.0)


@pytest.fixture(scope="session")
def crc6():
    return CrcSpec.from_string("1100001")
