import pytest

_LINES: dict[int, str] = {}


class _Recorder:
    def __call__(self, number: int, title: str, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        _LINES[number] = f"[{status}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        print(_LINES[number])


@pytest.fixture
def acceptance():
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
