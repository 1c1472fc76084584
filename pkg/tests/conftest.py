"""Shared fixtures and the per-criterion acceptance summary."""

from collections import OrderedDict

import pytest

_RESULTS: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _RESULTS.setdefault(number, {"title": title, "outcomes": [], "details": []})


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number = dict(report.user_properties).get("criterion")
    if number is None or number not in _RESULTS:
        return
    entry = _RESULTS[number]
    entry["outcomes"].append(report.outcome)
    entry["details"].extend(v for k, v in report.user_properties if k == "detail")


@pytest.fixture(autouse=True)
def _tag_criterion(request):
    mark = request.node.get_closest_marker("criterion")
    if mark is not None:
        request.node.user_properties.append(("criterion", mark.args[0]))


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the acceptance summary."""

    def add(text: str) -> None:
        request.node.user_properties.append(("detail", text))

    return add


def pytest_terminal_summary(terminalreporter):
    ran = {n: e for n, e in _RESULTS.items() if e["outcomes"]}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ran):
        entry = ran[number]
        ok = all(o == "passed" for o in entry["outcomes"])
        verdict = "PASS" if ok else "FAIL"
        details = "; ".join(entry["details"])
        line = f"criterion {number}: {verdict} - {entry['title']}"
        terminalreporter.write_line(line + (f" [{details}]" if details else ""))
