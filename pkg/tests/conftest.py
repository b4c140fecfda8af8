import sys
from pathlib import Path

# shared strategies and oracles live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

import pytest

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """``criterion(name, passed, detail)`` logs a PASS/FAIL line and returns ``passed``."""
    def record(name: str, passed: bool, detail: str = "") -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {name}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
