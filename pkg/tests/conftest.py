import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mtbranch import branch  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def default_curve():
    """The default sweep, shared by every test that needs the full branch."""
    return branch.sweep_branch(branch.default_grid())


@pytest.fixture(scope="session")
def refined_curve(default_curve):
    return branch.refine_curve(default_curve)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
