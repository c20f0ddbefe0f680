import numpy as np
import pytest

from pilotwave.wavefn import Grid

ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip("."))):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE_LINES]


@pytest.fixture(scope="session")
def line40():
    return Grid.line(-40.0, 40.0, 4096)


@pytest.fixture(scope="session")
def line20():
    return Grid.line(-20.0, 20.0, 1024)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
