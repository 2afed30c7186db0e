from __future__ import annotations

import pytest

_ACCEPTANCE: dict[int, str] = {}


class AcceptanceLog:
    """Collects one PASS/FAIL line per acceptance criterion for the run summary."""

    def record(self, number: int, ok: bool, text: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {text}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok


@pytest.fixture(scope="session")
def acceptance() -> AcceptanceLog:
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
