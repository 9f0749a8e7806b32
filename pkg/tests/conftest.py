import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> "PASS"/"FAIL" line, filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the summary is printed at session end."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
