import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from radio.array import ArrayConfig  # noqa: E402
from radio.codebook import build_codebook  # noqa: E402
from radio.scene import Scene  # noqa: E402


@pytest.fixture
def small_array():
    return ArrayConfig(m_y=8, m_z=8)


@pytest.fixture
def small_codebook(small_array):
    return build_codebook(small_array, N=5, S=3)


@pytest.fixture
def empty_scene():
    return Scene(bs_position=np.array([0.0, 0.0, 25.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
