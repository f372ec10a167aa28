import os
import sys

import numpy as np
import pytest

# the project is laid out as top-level packages run from the repository root
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from core.data_handler import gen_randn  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dataset():
    return gen_randn(40, 8, seed=3)


@pytest.fixture
def tall_dataset():
    return gen_randn(30, 12, seed=5)
