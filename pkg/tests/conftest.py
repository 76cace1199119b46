import pytest

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record ``(number, name, passed, detail)`` for the acceptance summary."""
    log = request.config.stash[ACCEPTANCE_KEY]

    def record(num, name, passed, detail=""):
        log.append((num, name, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE_KEY, [])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(log, key=lambda t: (t[0], t[1])):
        terminalreporter.write_line(f"AC{num:<2} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
