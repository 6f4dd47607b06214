from hypothesis import settings

# CPU-bound solver calls make per-example timing noisy
settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
