"""Echo acceptance verdict lines after the summary, past output capture."""

import pytest

VERDICT_LINES = []


@pytest.fixture
def verdicts():
    return VERDICT_LINES


def pytest_terminal_summary(terminalreporter):
    if VERDICT_LINES:
        terminalreporter.section("figure acceptance criteria")
        for line in VERDICT_LINES:
            terminalreporter.write_line(line)
