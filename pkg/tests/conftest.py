"""Collects per-criterion results from ``test_acceptance.py`` and prints a summary."""

import pytest

CRITERIA = {
    1: "cos^n overlap of like-spectrum n-photon states",
    2: "coherent-state energy",
    3: "APD click law",
    4: "beam splitter then APD no-detect probability",
    5: "POVM completeness",
    6: "engine vs dense oracle",
    7: "bi-SU(2) invariance of singlet statistics",
    8: "partial-trace consistency",
    9: "gated detection long-window limit",
    10: "single-photon decay law",
    11: "affinity monotonicity under partial trace (reported)",
}

_outcomes: dict[int, list[bool]] = {}
_notes: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def note(request):
    """Attach a detail string to the summary line of the test's criterion."""
    marker = request.node.get_closest_marker("criterion")

    def add(text):
        if marker is not None:
            _notes.setdefault(marker.args[0], []).append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        _outcomes.setdefault(marker.args[0], []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, label in CRITERIA.items():
        results = _outcomes.get(n)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        line = f"criterion {n:2d}: {status:7s} {label}"
        if n in _notes:
            line += " | " + "; ".join(_notes[n])
        tr.write_line(line)
