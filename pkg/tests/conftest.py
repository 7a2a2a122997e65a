import warnings

import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _silence_h_warning():
    # the h > 0.1 soft warning fires all over the parameter lattices
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="h = .* exceeds")
        yield


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=20240901))
