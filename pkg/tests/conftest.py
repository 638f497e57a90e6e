"""Shared pytest hooks.

Tests marked ``@pytest.mark.acceptance("<criterion>", "<description>")``
feed a pass/fail table printed at the end of the run, one line per
criterion. A criterion fails if any test carrying its marker fails or
errors (setup errors included); it passes only if every such test passed.
"""

from __future__ import annotations

import pytest

# criterion id -> human description, filled in as markers are seen
_DESCRIPTIONS: dict[str, str] = {}
# criterion id -> list of test outcomes (True = passed)
_OUTCOMES: dict[str, list[bool]] = {}


def _marker_of(item):
    return item.get_closest_marker("acceptance")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = _marker_of(item)
    if marker is None or not marker.args:
        return
    criterion = marker.args[0]
    if len(marker.args) > 1:
        _DESCRIPTIONS.setdefault(criterion, marker.args[1])
    results = _OUTCOMES.setdefault(criterion, [])
    if report.when == "call":
        results.append(report.passed)
    elif report.failed:
        # setup/teardown error counts against the criterion
        results.append(False)
    elif report.when == "setup" and report.skipped:
        results.append(False)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _OUTCOMES and not _DESCRIPTIONS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for criterion in sorted(set(_DESCRIPTIONS) | set(_OUTCOMES)):
        results = _OUTCOMES.get(criterion, [])
        if not results:
            verdict = "NOT RUN"
        elif all(results):
            verdict = "PASS"
        else:
            verdict = "FAIL"
        desc = _DESCRIPTIONS.get(criterion, "")
        tr.write_line(f"{verdict:8s} {criterion}: {desc}")
