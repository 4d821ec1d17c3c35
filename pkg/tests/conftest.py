import pytest

_CRITERIA: list[tuple[str, str, str]] = []


class _Criterion:
    def __init__(self, number, label):
        self.number, self.label = number, label
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        line = f"criterion {self.number} {status}: {self.label}" + (f" [{self.detail}]" if self.detail else "")
        print(line)
        _CRITERIA.append((self.number, status, line))
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(_CRITERIA, key=lambda c: int(c[0])):
        terminalreporter.write_line(line)
