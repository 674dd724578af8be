import numpy as np
import pytest

from geogap.scenario import DEFAULT_SEED, Scenario

_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def rational():
    return Scenario.builtin("rational")


@pytest.fixture(scope="session")
def lame_g1():
    return Scenario.builtin("lame-g1")


@pytest.fixture
def rng():
    return np.random.default_rng(DEFAULT_SEED)


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the lines are repeated in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]
    seen = []

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}  ({detail})"
        print(line)
        lines.append((number, line))
        seen.append(number)
        return passed

    yield record
    if not seen:
        # the test raised before it could report
        number = int(request.node.name.split("_")[1].lstrip("c"))
        lines.append((number, f"criterion {number}: FAIL  {request.node.name}  (raised)"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
