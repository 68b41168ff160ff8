"""Collects acceptance outcomes and prints one verdict line per criterion."""

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_results: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    num, name = int(m.group(1)), m.group(2).replace("_", " ")
    if report.when == "call" or report.outcome != "passed":
        prev = _results.get(num, ("PASS", name))[0]
        verdict = "PASS" if report.outcome == "passed" and prev == "PASS" else "FAIL"
        _results[num] = (verdict, name)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        verdict, name = _results[num]
        terminalreporter.write_line(f"criterion {num}: {verdict}  {name}")
