"""Prints one PASS/FAIL line per acceptance criterion after the run."""

_results: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = {}


def pytest_collection_finish(session):
    config = session.config
    for item in session.items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            config._criteria[item.nodeid] = m.args


def pytest_runtest_logreport(report):
    if report.when == "call" or report.outcome != "passed":
        prev = _results.get(report.nodeid)
        if prev != "FAIL":
            _results[report.nodeid] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter, config):
    criteria = getattr(config, "_criteria", {})
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (number, title) in sorted(criteria.items(), key=lambda kv: kv[1][0]):
        status = _results.get(nodeid, "NOT RUN")
        terminalreporter.write_line(f"criterion {number:>2}: {status:<7} {title}")
