import pytest

from helpers import desk_snn, lowrank
from randcur.matsource import MatrixSource

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion.

    Usage: ``criterion(3, ok, "detail")``; the assertion is left to the test.
    """
    store = request.config.stash[_RESULTS]

    def record(number, ok, detail=""):
        store[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        ok, detail = store[number]
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def snn200():
    return desk_snn(200, 0)


@pytest.fixture
def rank10():
    return MatrixSource(lowrank(100, 80, 10, 0))
