"""Shared fixtures."""

import numpy as np
import pytest

from tests.common import slab, square, triangle_p1, triangle_p2


@pytest.fixture
def unit_square():
    return square()


@pytest.fixture
def p1():
    return triangle_p1()


@pytest.fixture
def p2():
    return triangle_p2()


@pytest.fixture
def slab_upper():
    return slab(0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
