"""Shared pytest plumbing: the acceptance verdict registry.

Acceptance tests record one PASS/FAIL line each with their measured
numbers; the lines are replayed in a terminal section after the run so
the verdicts are visible even though pytest captures stdout.
"""

import pytest

_LINES: "list[str]" = []


@pytest.fixture
def record():
    """Append one verdict line to the end-of-run acceptance summary."""

    def _record(line: str) -> None:
        _LINES.append(line)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _LINES:
        terminalreporter.section("acceptance verdicts")
        for line in _LINES:
            terminalreporter.write_line(line)
