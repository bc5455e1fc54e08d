import pytest

_ACCEPTANCE: dict[str, tuple[str, str, float]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and report.when == "call":
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE[item.name] = (doc, "PASS" if report.passed else "FAIL", report.duration)
    elif item.module.__name__.endswith("test_acceptance") and report.when == "setup" and report.failed:
        _ACCEPTANCE[item.name] = (item.name, "FAIL", 0.0)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        doc, status, duration = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{status} {doc} ({duration:.2f} s)")
