import numpy as np
import pytest

from elliptic import build_grid


@pytest.fixture(scope="session")
def grid200():
    return build_grid(1, 200)


@pytest.fixture(scope="session")
def grid99():
    return build_grid(1, 99)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
