"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

_criteria = {}  # nodeid -> criterion title (parametrized cases share a title)
_outcomes = {}


def pytest_collection_modifyitems(items):
    for item in items:
        if item.module.__name__.endswith("test_acceptance"):
            _criteria[item.nodeid] = (item.function.__doc__ or item.name).strip().splitlines()[0]


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    if report.failed:
        _outcomes[report.nodeid] = "FAIL"
    elif report.when == "call" and report.nodeid not in _outcomes:
        _outcomes[report.nodeid] = "SKIP" if report.skipped else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    summary = {}
    for nodeid, title in _criteria.items():
        outcome = _outcomes.get(nodeid, "NOT RUN")
        prev = summary.get(title)
        if prev is None or prev == "PASS" or outcome == "FAIL":
            summary[title] = outcome
    terminalreporter.section("acceptance criteria")
    for title, outcome in summary.items():
        terminalreporter.write_line(f"{outcome:<8}{title}")
