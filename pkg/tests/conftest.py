import pytest


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture
def record(request):
    """Store one criterion outcome for the end-of-run summary."""
    def _record(number: int, passed: bool, detail: str):
        request.config._acceptance[number] = (bool(passed), detail)
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, detail = results[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
