import numpy as np
import pytest

from ulad.signalgen import NoiseParams


@pytest.fixture
def rng():
    return np.random.default_rng(20190708)


@pytest.fixture
def unit_noise():
    return NoiseParams(1.0)


# Acceptance bookkeeping: tests marked ``criterion(k)`` roll up into one
# PASS/FAIL line per criterion, printed at the end of the run.
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.skipped or (report.when != "call" and report.passed):
        return
    entry = _CRITERIA.setdefault(mark.args[0], {"ok": True, "details": []})
    entry["ok"] &= report.passed
    entry["details"].extend(v for k, v in item.user_properties if k == "detail")
    item.user_properties[:] = [p for p in item.user_properties if p[0] != "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        entry = _CRITERIA[k]
        status = "PASS" if entry["ok"] else "FAIL"
        detail = "; ".join(entry["details"])
        terminalreporter.write_line(f"criterion {k:>2}: {status}  {detail}".rstrip())
