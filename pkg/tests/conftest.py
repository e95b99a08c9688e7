"""Terminal summary for the acceptance suite.

Every test in test_acceptance.py gets one PASS/FAIL line at the end of the
run, labelled by the first line of its docstring, so the acceptance status
is readable without scrolling through the full pytest output.
"""

import pytest

_labels: dict[str, str] = {}
_outcomes: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        if "test_acceptance" in item.nodeid:
            doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
            _labels[item.nodeid] = doc


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    out = yield
    rep = out.get_result()
    if item.nodeid in _labels:
        if rep.when == "call":
            _outcomes[item.nodeid] = "PASS" if rep.passed else "FAIL"
        elif rep.when == "setup" and rep.outcome != "passed":
            _outcomes[item.nodeid] = "SKIP" if rep.skipped else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, label in _labels.items():
        status = _outcomes.get(nodeid, "NOT RUN")
        terminalreporter.write_line(f"{status}  {label}")
