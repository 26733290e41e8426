import os
import tempfile

import pytest

# persist enumeration-derived constants between test processes
os.environ.setdefault("LATORBIT_CACHE_DIR", os.path.join(tempfile.gettempdir(), "latorbit-cache"))

ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    def rec(c):
        ACCEPTANCE_LINES.append(c.line())
        print(c.line())

    return rec


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
