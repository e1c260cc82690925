import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion_log():
    """Record a pass/fail line for an acceptance criterion."""
    def log(number, ok, detail=""):
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
    return log


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
