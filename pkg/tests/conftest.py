import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, str] = {}
_NODE_CRITERION: dict[str, int] = {}
_RESULTS: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            number, title = mark.args
            _CRITERIA[number] = title
            _NODE_CRITERION[item.nodeid] = number


def pytest_runtest_logreport(report):
    number = _NODE_CRITERION.get(report.nodeid)
    if number is None:
        return
    if report.when == "call" or report.failed:
        _RESULTS.setdefault(number, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        outcomes = _RESULTS.get(number)
        if not outcomes:
            status = "NOT RUN"
        else:
            status = "PASS" if all(outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {_CRITERIA[number]}")
