import numpy as np
import pytest

from dualfrac import Grid3, demo_problem


@pytest.fixture(scope="session")
def grid16():
    return Grid3(10.0, 16)


@pytest.fixture(scope="session")
def grid32():
    return Grid3(20.0, 32)


@pytest.fixture(scope="session")
def grid64():
    return Grid3(20.0, 64)


@pytest.fixture(scope="session")
def demo():
    return demo_problem()


@pytest.fixture(scope="session")
def demo32(demo, grid32):
    return demo.with_grid(grid32)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
