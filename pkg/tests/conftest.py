import pytest

_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Session-wide list of (criterion, passed, detail) lines."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(lines, key=lambda r: str(r[0])):
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
