import _acceptance_util


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = _acceptance_util.summary_lines()
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
