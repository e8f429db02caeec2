import numpy as np
import pytest

from nonlocal_mosco.domains import build_domain


@pytest.fixture(scope="session")
def unit_interval():
    return build_domain({"dim": 1, "geometry": [0, 1], "n": 8, "r_trunc": 2})


@pytest.fixture(scope="session")
def unit_square():
    return build_domain({"dim": 2, "geometry": "unit_square", "n": 4, "r_trunc": 2})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
