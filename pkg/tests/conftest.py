import numpy as np
import pytest

from mlofdm.numerics import RngStream

_CRITERIA: dict[int, list[str]] = {}


@pytest.fixture
def rng():
    return RngStream(1234, 0)


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        _CRITERIA.setdefault(marker.args[0], []).append("FAIL" if failed else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status = "PASS" if all(s == "PASS" for s in _CRITERIA[n]) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}")
