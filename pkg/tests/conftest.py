import numpy as np
import pytest

from zklab.ground_state import petviashvili_solve
from zklab.spectral import Grid3


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def gs96():
    """Reference ground state: 96^3 points on the box [-16, 16)^3."""
    return petviashvili_solve(Grid3.cube(96, 16.0), tol=1e-10)


@pytest.fixture(scope="session")
def gs48():
    """Coarse ground state for cheap scenario runs."""
    return petviashvili_solve(Grid3.cube(48, 16.0), tol=1e-10)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Callable ``record(n, ok, detail)`` collecting one line per criterion."""

    def record(n, ok, detail):
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((n, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
