import logging
import sys

import numpy as np
import pytest

from modqaoa.graphs import Graph, connected_caveman


@pytest.fixture(scope="session")
def caveman_3_4() -> Graph:
    return connected_caveman(3, 4)


@pytest.fixture(scope="session")
def caveman_4_4() -> Graph:
    return connected_caveman(4, 4)


@pytest.fixture(scope="session")
def ring_of_pairs() -> Graph:
    # 2 cliques of size 2: the smallest connected caveman graph (a 4-cycle)
    return connected_caveman(2, 2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _reset_root_logging():
    # cli.main() installs a root handler bound to whatever sys.stderr was at
    # the time; drop leftovers so they never outlive pytest's capture.
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # Echo the acceptance verdict lines after the run so they are visible
    # in plain `pytest -v` output.
    for name in ("test_acceptance", "tests.test_acceptance"):
        mod = sys.modules.get(name)
        lines = getattr(mod, "REPORT_LINES", None)
        if lines:
            terminalreporter.section("acceptance criteria")
            for line in lines:
                terminalreporter.write_line(line)
            return
