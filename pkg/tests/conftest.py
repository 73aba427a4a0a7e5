import math

import numpy as np
import pytest

from mgtlab import ModalBasis, make_params

# acceptance lines collected by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def unit_params():
    """alpha = c = delta = 1, tau = 0.1."""
    return make_params(1, 1, 1, 0.1)


@pytest.fixture
def basis8():
    return ModalBasis.dirichlet_1d(8)


@pytest.fixture
def mu_pi2():
    return math.pi**2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
