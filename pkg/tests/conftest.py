import re

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    num = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        prev = _ACCEPTANCE.get(num, "PASS")
        _ACCEPTANCE[num] = "PASS" if prev == "PASS" and report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:2d}: {_ACCEPTANCE[num]}")
