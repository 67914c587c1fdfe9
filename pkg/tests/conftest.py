import os


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    path = os.path.join(os.path.dirname(__file__), "acceptance_results.txt")
    if os.path.exists(path):
        terminalreporter.section("acceptance criteria")
        with open(path) as f:
            for line in f:
                terminalreporter.write_line(line.rstrip())
