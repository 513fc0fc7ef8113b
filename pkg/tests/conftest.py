import pytest

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


class Criterion:
    """Collects named range checks for one acceptance criterion."""

    def __init__(self, number, title, lines):
        self.number = number
        self.title = title
        self.lines = lines
        self.failures = []
        self.notes = []

    def within(self, name, value, target, tol):
        ok = abs(value - target) <= tol
        self.notes.append(f"{name}={value:.4g}")
        if not ok:
            self.failures.append(f"{name}={value:.6g} not in {target} +/- {tol}")

    def holds(self, name, condition, detail=""):
        self.notes.append(f"{name}={'ok' if condition else 'no'}")
        if not condition:
            self.failures.append(f"{name} failed {detail}".rstrip())

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures) if self.failures else ", ".join(self.notes)
        line = f"criterion {self.number} [{self.title}]: {status} ({detail})"
        self.lines.append(line)
        print(line)
        if exc is None:
            assert not self.failures, line
        return False


@pytest.fixture
def criterion(request):
    lines = request.config.stash[_LINES_KEY]
    return lambda number, title: Criterion(number, title, lines)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
