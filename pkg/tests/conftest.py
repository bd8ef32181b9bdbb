import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

CACHE_DIR = Path(__file__).parent / "data" / "openml_cache"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    results = item.config._criteria.setdefault(number, {"title": title, "ok": True, "seen": False})
    if report.when == "call" or report.failed or report.skipped:
        results["seen"] = True
        if not report.passed:
            results["ok"] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    criteria = getattr(config, "_criteria", {})
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(criteria):
        info = criteria[number]
        status = "PASS" if info["ok"] and info["seen"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {info['title']}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cache_dir():
    return CACHE_DIR
