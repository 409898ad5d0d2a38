import numpy as np
import pytest

from noisybs import RngSeed, sample_haar_unitary


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def haar_u12():
    return sample_haar_unitary(12, RngSeed(777))
