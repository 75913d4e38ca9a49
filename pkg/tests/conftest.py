from __future__ import annotations

import numpy as np
import pytest

from regnorm.types import BlockLp, Euclidean, Lp, Schatten

SMOOTH_SPACES = [
    Euclidean(5),
    Lp(6, 3),
    Lp(4, 8),
    Lp(5, 60),
    Schatten(3, 4, 3),
    Schatten(2, 2, 2),
    BlockLp((Euclidean(2), Lp(3, 4)), 3),
]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
