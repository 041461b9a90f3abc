import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line; the lines are repeated in the terminal summary."""

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{label} {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        _LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
