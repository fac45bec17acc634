import copy
from fractions import Fraction

import pytest

from src.data.symbolic import MeasureOracle, full_shift
from src.lattice.semigroup import standard_system
from src.utils.cache import MemoCache
from src.utils.config import Config


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: reproduction families that take tens of seconds")


@pytest.fixture(autouse=True)
def restore_config():
    """Budget and tolerance overrides must not leak between tests"""
    config = Config()
    saved = copy.deepcopy(config._config)
    yield
    config._config = saved


@pytest.fixture
def fresh_cache():
    MemoCache().clear()
    yield MemoCache()
    MemoCache().clear()


@pytest.fixture
def full2():
    return full_shift(2)


@pytest.fixture
def uniform2():
    return MeasureOracle.bernoulli([Fraction(1, 2), Fraction(1, 2)])


@pytest.fixture
def quarter():
    return MeasureOracle.bernoulli(["1/4", "3/4"])


@pytest.fixture
def std1():
    return standard_system(1, 20)
