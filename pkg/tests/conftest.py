import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from carbonpath.library import build_catalog, load_tables  # noqa: E402

WORKLOADS = Path(__file__).resolve().parents[1] / "workloads"


@pytest.fixture(scope="session")
def tables():
    return load_tables()


@pytest.fixture(scope="session")
def catalog(tables):
    return build_catalog(tables)


@pytest.fixture(scope="session")
def wl1():
    from carbonpath.cli import load_workload
    return load_workload("WL1")


@pytest.fixture(scope="session")
def evaluator(tables, catalog, wl1):
    from carbonpath.sa.evaluate import Evaluator
    return Evaluator(tables, catalog, wl1)


@pytest.fixture(scope="session")
def small_normalizer(evaluator):
    from carbonpath.sa.normalize import calibrate_normalizer
    return calibrate_normalizer(evaluator, n=500, seed=7)


# --- acceptance summary: one pass/fail line per criterion -------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    if report.failed or report.when == "call":
        _CRITERIA[number] = ("PASS" if report.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")
