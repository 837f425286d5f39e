import helpers


def pytest_terminal_summary(terminalreporter):
    if helpers.CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in helpers.CRITERION_LINES:
            terminalreporter.write_line(line)
