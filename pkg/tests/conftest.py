import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record a criterion outcome; every recorded line is echoed in the terminal summary."""

    def record(number: int, title: str, passed: bool, detail: str) -> None:
        _ACCEPTANCE[number] = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} -- {detail}"
        assert passed, _ACCEPTANCE[number]

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
