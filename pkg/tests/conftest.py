"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", tuple(mark.args)))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    number, title = props["criterion"]
    if report.when == "call" or report.failed:
        prev = _OUTCOMES.get(number, (title, "PASS"))[1]
        status = "FAIL" if report.failed or prev == "FAIL" else ("SKIP" if report.skipped else "PASS")
        _OUTCOMES[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        title, status = _OUTCOMES[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}")
