import numpy as np
import pytest

from ccfcompare import GroupedSample, LagGrid


def make_grouped(rng, n1=8, n2=7, p=2, M=11, shift=0.0):
    grid = LagGrid(-1.0, 1.0, M) if M > 1 else LagGrid(0.0, 0.0, 1)
    y1 = rng.standard_normal((n1, p, M)) + shift
    y2 = rng.standard_normal((n2, p, M))
    return GroupedSample(y1, y2, grid, tuple(f"m{k}" for k in range(p)))


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
