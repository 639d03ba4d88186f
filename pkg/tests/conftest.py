import sys

import pytest

from nikishin import arcsine, nikishin_components, working_precision

BITS = 212


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _working_precision():
    with working_precision(BITS):
        yield


@pytest.fixture(scope="session")
def system2():
    with working_precision(BITS):
        return nikishin_components([arcsine(-1, 1), arcsine(2, 3)])


@pytest.fixture(scope="session")
def system3():
    with working_precision(BITS):
        return nikishin_components([arcsine(-1, 1), arcsine(2, 3), arcsine(4, 5)])
