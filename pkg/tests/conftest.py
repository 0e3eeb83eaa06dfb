from __future__ import annotations

import numpy as np
import pytest

from vortexpatch.geometry import ORIGIN, Disk


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_disk() -> Disk:
    return Disk(ORIGIN, 1.0)
