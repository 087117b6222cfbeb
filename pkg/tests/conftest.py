import pytest

from nexcv.classifier import BaselineClassifier
from nexcv.dataset import generate_synthetic


@pytest.fixture(scope="session")
def synth_shape():
    """5 large classes of 100, 20 small of 5-10, disjoint vocabularies."""
    return generate_synthetic(5, 100, 20, (5, 10), 20, 0.0, seed=7)


@pytest.fixture
def baseline_factory():
    return BaselineClassifier


# Acceptance summary: one line per criterion, printed after the run.

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "details": []})
    if report.failed or (report.when == "call" and report.skipped):
        entry["passed"] = False
    if report.when == "call":
        entry["details"] += [v for k, v in report.user_properties if k == "detail"]


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        verdict = "PASS" if entry["passed"] else "FAIL"
        detail = f" ({'; '.join(entry['details'])})" if entry["details"] else ""
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {entry['title']}{detail}")
