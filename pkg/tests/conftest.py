import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_REPORTS: list[tuple[str, str]] = []
_CRITERIA: dict[int, list[tuple[str, str]]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, value in report.user_properties:
        if isinstance(key, str) and key.startswith("report: "):
            _REPORTS.append((key[len("report: "):], value))
    marker = report.user_properties and dict(report.user_properties).get("criterion")
    if marker:
        _CRITERIA.setdefault(marker, []).append((report.nodeid.split("::")[-1], report.outcome))


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", int(mark.args[0])))


def pytest_terminal_summary(terminalreporter):
    if _REPORTS:
        terminalreporter.section("reported values")
        for key, value in _REPORTS:
            terminalreporter.write_line(f"{key}: {value}")
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        results = _CRITERIA[number]
        ok = all(outcome == "passed" for _, outcome in results)
        failed = [name for name, outcome in results if outcome != "passed"]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += " (" + ", ".join(failed) + ")"
        terminalreporter.write_line(line)
