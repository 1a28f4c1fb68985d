"""Shared pytest plumbing.

The acceptance tests record one verdict line per criterion; the hook below
replays those lines in a terminal section after the run, so they stay
visible even though pytest captures stdout of passing tests.
"""

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
