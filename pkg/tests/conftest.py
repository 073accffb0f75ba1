import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo checks over many seeds or long horizons")


@pytest.fixture(autouse=True)
def restore_output_enabled():
    from output import Output
    saved = Output.enabled
    yield
    Output.enabled = saved
