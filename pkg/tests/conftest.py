import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def record(request):
    """Log one acceptance line; the summary prints them after the run."""
    lines = request.config.stash[_LINES]

    def log(label: str, ok: bool | None, detail: str) -> bool:
        status = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        lines.append(f"{status}  {label}: {detail}")
        return bool(ok) if ok is not None else True

    return log


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
