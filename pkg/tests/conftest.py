import helpers


def pytest_terminal_summary(terminalreporter):
    """Surface the per-criterion verdict lines after the run, since normal
    capture would swallow them on success."""
    if helpers.ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in helpers.ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)
