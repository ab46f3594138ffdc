import pytest

_RESULTS: dict[int, tuple[str, bool, str]] = {}


class AcceptanceRecorder:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def record(self, number: int, title: str, passed: bool, detail: str = "") -> None:
        _RESULTS[number] = (title, bool(passed), detail)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, passed, detail = _RESULTS[number]
        line = f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
    failed = sum(not ok for _, ok, _ in _RESULTS.values())
    terminalreporter.write_line(f"{len(_RESULTS) - failed}/{len(_RESULTS)} criteria passed")
