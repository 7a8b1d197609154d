import numpy as np
import pytest

from spdr.core import random_spd

# PASS/FAIL lines collected by the acceptance suite, echoed after the run
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def spd_factory(rng):
    def make(n, size=None, cond=None):
        return random_spd(n, rng, size=size, cond=cond)
    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
