import pytest

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    key = marker.args[0]
    title = marker.args[1]
    status = "PASS" if report.passed else "FAIL"
    prev = _ACCEPTANCE.get(key)
    if prev is None or prev[0] == "PASS":
        _ACCEPTANCE[key] = (status, title)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k)):
        status, title = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {status}  {title}")
