"""Shared test configuration.

Numerical tests carry their own tolerances; the hypothesis profile
only disables the wall-clock deadline (vectorized numpy work trips it
on slow CI boxes) and caps example counts so the property tests stay
fast relative to the frozen-value tests.
"""

import numpy as np
import pytest

try:
    from hypothesis import HealthCheck, settings

    settings.register_profile(
        "stretchlab",
        deadline=None,
        max_examples=50,
        suppress_health_check=[HealthCheck.too_slow],
    )
    settings.load_profile("stretchlab")
except ImportError:
    pass


@pytest.fixture
def rng():
    return np.random.default_rng(0)
