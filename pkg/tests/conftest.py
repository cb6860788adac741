import numpy as np
import pytest

from zgaps.momentkernel import AmplifierSpec
from zgaps.polynomial import Polynomial
from zgaps.rqmc import QuadratureBudget

SMOKE = QuadratureBudget(1 << 10, 8, seed=7)


@pytest.fixture
def smoke_budget():
    return SMOKE


@pytest.fixture
def amp_h1():
    return AmplifierSpec(0.2499, Polynomial((1.0, -2.5)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
