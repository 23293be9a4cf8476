import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None and (report.when == "call" or report.outcome != "passed"):
        number, title = marker.args
        entry = item.config.stash[_CRITERIA].setdefault(number, {"title": title, "passed": 0, "failed": []})
        if report.passed and report.when == "call":
            entry["passed"] += 1
        elif report.failed:
            entry["failed"].append(item.name)
    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_CRITERIA]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        r = results[number]
        total = r["passed"] + len(r["failed"])
        verdict = "FAIL" if r["failed"] else "PASS"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {r['title']} ({r['passed']}/{total} tests passed)")
