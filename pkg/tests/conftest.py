import numpy as np
import pytest

from sddpde.problem import nicholson_problem
from sddpde.spatial import DomainConfig, SpatialOperator

ACCEPTANCE_LINES = []


@pytest.fixture
def domain():
    return DomainConfig(np.pi, 16, 64)


@pytest.fixture
def operator(domain):
    return SpatialOperator(domain, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def nicholson():
    return nicholson_problem(p=2.0, d=0.1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES
