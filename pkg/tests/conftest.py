"""Shared fixtures and the acceptance-summary reporting hook."""

import pytest

from errorfloor.tanner import random_regular_code

# (criterion number, "[PASS]/[FAIL] ..." line) per acceptance criterion,
# echoed after the pytest summary regardless of capture settings
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_code():
    """4-cycle-free (3,6)-regular code on 36 variables."""
    return random_regular_code(36, 3, 6, seed=1)
