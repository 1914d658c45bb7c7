import pytest

from urbanplanner.adapters import stub_toolkit
from urbanplanner.golden import golden_corpus
from urbanplanner.registry import default_registry


@pytest.fixture(scope="session")
def golden():
    return golden_corpus()


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def toolkit():
    return stub_toolkit()


@pytest.fixture(scope="session")
def adapters(toolkit, registry):
    return toolkit.adapters(registry)


# -- acceptance summary: one PASS/FAIL line per criterion -----------------------------

_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::test_criterion_")[1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        number, _, title = name.partition("_")
        terminalreporter.write_line(f"criterion {int(number):>2} {title.replace('_', ' ')}: {_criteria[name]}")
