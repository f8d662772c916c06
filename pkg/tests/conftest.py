import pytest

CRITERION_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion_log():
    return CRITERION_LINES


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES, key=lambda s: int(s[7:9])):
            terminalreporter.write_line(line)
