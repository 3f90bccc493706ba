import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_block(rng, n_sym, alphabet=(1, 3, 5, 7)):
    """Random on-grid dual-polarization 64-QAM block."""
    from dss.core import DualPolSymbolBlock

    pts = np.concatenate([-np.asarray(alphabet), alphabet])
    x = rng.choice(pts, size=(4, n_sym)).astype(float)
    return DualPolSymbolBlock(x[0] + 1j * x[1], x[2] + 1j * x[3])
