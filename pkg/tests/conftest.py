import numpy as np
import pytest

from lcmorrey.spectral import GridSpec


@pytest.fixture(scope="session")
def grid128():
    return GridSpec(2, 128, 2 * np.pi)


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(2, 64, 2 * np.pi)


@pytest.fixture(scope="session")
def big_box():
    """Box on which the k=1 harmonic map meets the decay hypothesis (n=2, p=4)."""
    return GridSpec(2, 64, 32.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
