"""Shared fixtures.

The default grid (8192 points on a box of length 256) is what every
tolerance in the suite is calibrated against; tests that need a coarser
or finer grid construct their own.
"""

import numpy as np
import pytest
from hypothesis import settings, HealthCheck

from szego_lab.spectral_core import SpectralGrid

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    max_examples=25,
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def grid() -> SpectralGrid:
    return SpectralGrid(8192, 256.0)


@pytest.fixture(scope="session")
def tail_tol(grid) -> float:
    # grid truncation floor used for continuum identities
    return max(1e-8, 10.0 / grid.box_length)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
