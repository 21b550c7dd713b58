import pytest

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def _report(key, ok, detail):
        lines.append((str(key), bool(ok), detail))
        assert ok, f"criterion {key}: {detail}"

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key, ok, detail in sorted(lines, key=lambda t: (int(t[0].rstrip("abcdefgh")), t[0])):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
