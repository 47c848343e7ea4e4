import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Print and record one PASS/FAIL line, then assert it."""
    lines = request.config.stash.setdefault(_LINES, [])

    def report(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        print(line)
        lines.append(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
