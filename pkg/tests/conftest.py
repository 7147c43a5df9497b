import sys
from pathlib import Path

import numpy as np
import pytest

TESTS = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS))

DATA = TESTS / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def h2_fcidump() -> Path:
    return DATA / "h2_sto6g.fcidump"


@pytest.fixture(scope="session")
def h2_integrals(h2_fcidump):
    from iqcc.fermion import read_fcidump

    return read_fcidump(h2_fcidump)


@pytest.fixture(scope="session")
def h2_operator(h2_integrals):
    from iqcc.fermion import jordan_wigner

    return jordan_wigner(h2_integrals)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
