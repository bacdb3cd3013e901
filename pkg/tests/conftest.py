import numpy as np
import pytest
from hypothesis import settings

from gengeom.config import builtin
from gengeom.sphere6 import sphere6

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def s6():
    return sphere6()


@pytest.fixture(scope="session")
def s6_points(s6):
    return s6.sample(100, seed=0)


@pytest.fixture(scope="session")
def r2():
    return builtin("r2")


@pytest.fixture(scope="session")
def r4():
    return builtin("r4")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
