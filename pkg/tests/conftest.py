from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from recgame import _kernels

settings.register_profile(
    "suite", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile once up front so timed tests measure steady-state work
    _kernels.warm_up()
