import pytest

from tempclt.qfield import Surd
from tempclt.renorm import renorm_orbit, to_internal
from tempclt.towers import build_stack

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pell():
    return to_internal(Surd(-1, 1, 1, 2), Surd(1, 0, 2, 0))


@pytest.fixture(scope="session")
def golden():
    a = Surd(3, -1, 2, 5)
    return to_internal(a, a / 2)


@pytest.fixture(scope="session")
def pell_stack(pell):
    return build_stack(renorm_orbit(pell, 66), 64)


@pytest.fixture(scope="session")
def golden_stack(golden):
    return build_stack(renorm_orbit(golden, 66), 64)
