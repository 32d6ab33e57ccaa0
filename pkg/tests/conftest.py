"""Shared fixtures: a collector that echoes acceptance criterion results.

Criterion tests append one `criterion N: PASS/FAIL` line each; the hook
prints them after the run so the verdicts are visible even when pytest
captures per-test output.
"""

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion_log() -> list[str]:
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
