import numpy as np
import pytest
from hypothesis import settings

from osclab.grid import CellMeasure, Grid

settings.register_profile('default', max_examples=40, deadline=None)
settings.load_profile('default')


@pytest.fixture
def grid1():
    return Grid(1, 6)


@pytest.fixture
def lebesgue1(grid1):
    return CellMeasure.lebesgue(grid1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
