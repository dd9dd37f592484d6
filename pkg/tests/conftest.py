"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_results = {}
_notes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.fixture
def note(request):
    """Attach a short measurement summary to the criterion's report line."""
    number = request.node.get_closest_marker("criterion").args[0]
    return lambda text: _notes.__setitem__(number, text)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    number, title = marker.args
    passed = report.passed and _results.get(number, (title, True))[1]
    _results[number] = (title, passed)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, passed = _results[number]
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title}"
        if number in _notes:
            line += f" [{_notes[number]}]"
        terminalreporter.write_line(line)
