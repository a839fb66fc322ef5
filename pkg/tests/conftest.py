from __future__ import annotations

import pytest

# (number, label, passed, detail) rows filled by the acceptance suite
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def criterion():
    def record(number: int, label: str, ok: bool, detail: str) -> None:
        ACCEPTANCE.append((number, label, bool(ok), detail))
        assert ok, f"criterion {number} ({label}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, ok, detail in sorted(ACCEPTANCE, key=lambda row: row[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {label}: {detail}")
