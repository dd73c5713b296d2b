import pytest

REPORTED = []


@pytest.fixture
def report():
    """Collect measured-but-not-asserted figures for the run summary."""
    def _report(line):
        REPORTED.append(line)
    return _report


def pytest_terminal_summary(terminalreporter):
    if REPORTED:
        terminalreporter.section("reported figures")
        for line in REPORTED:
            terminalreporter.write_line(line)
