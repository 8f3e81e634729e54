import math

import numpy as np
import pytest

from riskauction import Instance, Utility

CRITERIA = {}


def record_criterion(number, passed, detail):
    CRITERIA[number] = (bool(passed), detail)


@pytest.fixture
def two_point():
    return Instance([0.0, 1.0], [0.5, 0.5], [0.0, 2.0], 1, Utility.exponential(math.log(2.0)))


@pytest.fixture
def myerson_three():
    return Instance([0.0, 1.0, 2.0], [0.3, 0.1, 0.6], [0.0, 3.0], 1, Utility.linear())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
