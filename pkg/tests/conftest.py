import os

import pytest

RELEASE = os.environ.get("ODD_WARING_RELEASE") == "1"

_criteria: dict[int, list[str]] = {}


def pytest_collection_modifyitems(config, items):
    if RELEASE:
        return
    skip = pytest.mark.skip(reason="release gate; set ODD_WARING_RELEASE=1")
    for item in items:
        if "release" in item.keywords:
            item.add_marker(skip)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.skipped):
        return
    marker = report.keywords.get("criterion")
    if not marker:
        return
    name = report.nodeid.split("::")[-1]
    num = int(name.split("_")[2])
    outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    _criteria.setdefault(num, []).append(f"{outcome} {name}")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        parts = _criteria[num]
        overall = "FAIL" if any(p.startswith("FAIL") for p in parts) else (
            "PASS" if any(p.startswith("PASS") for p in parts) else "SKIP")
        terminalreporter.write_line(f"criterion {num}: {overall}  ({'; '.join(parts)})")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion: acceptance criterion test")
