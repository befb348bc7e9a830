import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion for the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _RESULTS[number] = (ok, detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
