import pytest

ACCEPTANCE_LINES: list[str] = []


class Criterion:
    """Collects PASS/FAIL lines for one acceptance criterion."""

    def __init__(self):
        self.failed = []

    def __call__(self, name: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        if not ok:
            self.failed.append(line)
        return ok

    def verify(self):
        assert not self.failed, "\n".join(self.failed)


@pytest.fixture
def criterion():
    return Criterion()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
