import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from concavlab import LatticeSpace

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def l1_2():
    return LatticeSpace.lq(2, 1)


@pytest.fixture
def l2_2():
    return LatticeSpace.lq(2, 2)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
