import pytest

from jumpcontrol.harvest import solve_harvest_threshold
from jumpcontrol.ipo import IpoParams, solve_ipo_threshold
from jumpcontrol.model import ModelParams, solve_roots

BASE = dict(mu=-0.05, sigma=0.25, lam=0.75, eta=1.5, alpha=0.1)
R_BASE = 1.25


@pytest.fixture(scope="session")
def model():
    return ModelParams(**BASE)


@pytest.fixture(scope="session")
def roots(model):
    return solve_roots(model)


@pytest.fixture(scope="session")
def ipo_a1(model):
    return solve_ipo_threshold(IpoParams(model, R_BASE, 1.0))


@pytest.fixture(scope="session")
def ipo_a0(model):
    return solve_ipo_threshold(IpoParams(model, R_BASE, 0.0))


@pytest.fixture(scope="session")
def harvest(model):
    return solve_harvest_threshold(model)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
