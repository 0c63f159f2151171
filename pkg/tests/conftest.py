import sys
from fractions import Fraction

import numpy as np
import pytest

from lorentzlab import ClassSpace, Space, TestSpaceParams


@pytest.fixture(scope="session")
def worked_params():
    return TestSpaceParams.generate(2, 2, 2)


@pytest.fixture(scope="session")
def worked_cs(worked_params):
    return ClassSpace(worked_params)


@pytest.fixture(scope="session")
def worked_space(worked_cs):
    return worked_cs.explicit()


@pytest.fixture
def two_points():
    return Space.build(["x", "y"], [[0, 1], [1, 0]], [1, 3])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def frac(s):
    return Fraction(s)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
