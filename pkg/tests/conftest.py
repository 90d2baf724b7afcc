"""Collects the one-line verdicts recorded by the acceptance suite and prints
them together at the end of the session."""

_VERDICTS: list[str] = []


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.skipped):
        _VERDICTS.extend(value for name, value in report.user_properties if name == "criterion")


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
