"""Collects acceptance verdicts and prints one line per criterion after the run."""

import pytest

_VERDICTS: dict[int, tuple[str, bool, str]] = {}


class AcceptanceLog:
    def record(self, number: int, title: str, ok: bool, detail: str = "") -> bool:
        _VERDICTS[number] = (title, bool(ok), detail)
        print(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())
        return bool(ok)


@pytest.fixture(scope="session")
def acceptance() -> AcceptanceLog:
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        title, ok, detail = _VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())
