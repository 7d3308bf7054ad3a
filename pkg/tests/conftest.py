import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion's verdict, print it, then assert it."""

    def check(number: int, ok: bool, detail: str):
        line = f"AC{number:<2} {'PASS' if ok else 'FAIL'}  {detail}"
        _RESULTS[number] = line
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in range(1, 12):
            terminalreporter.write_line(_RESULTS.get(n, f"AC{n:<2} FAIL  did not reach its check"))
