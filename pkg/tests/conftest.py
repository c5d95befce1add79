import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geonets.manifold import get_manifold, spheroid  # noqa: E402


@pytest.fixture(scope="session")
def s2():
    return get_manifold("s2")


@pytest.fixture(scope="session")
def rp2():
    return get_manifold("rp2")


@pytest.fixture(scope="session")
def plane():
    return get_manifold("plane")


@pytest.fixture(scope="session")
def paraboloid():
    return get_manifold("paraboloid")


@pytest.fixture(scope="session")
def ellipsoid():
    return spheroid(1.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
