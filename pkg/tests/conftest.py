import pytest


def pytest_configure(config):
    config._criterion_lines = []


@pytest.fixture
def report(request):
    """Collects one-line verdicts echoed in the terminal summary."""

    def _report(line: str) -> None:
        request.config._criterion_lines.append(line)

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
