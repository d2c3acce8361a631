import pytest

_ACCEPTANCE = {}


class AcceptanceLog:
    def record(self, number: int, ok: bool, detail: str):
        _ACCEPTANCE[number] = (bool(ok), detail)
        return ok


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
