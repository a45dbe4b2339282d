import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from htem.streams import make_stream

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return make_stream(12345)


def assert_close_rel(actual, expected, rtol):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    err = np.max(np.abs(actual - expected) / np.maximum(np.abs(expected), 1e-300))
    assert err <= rtol, f"relative error {err:.3e} > {rtol:.1e}"


# --- acceptance report -------------------------------------------------------
# Tests marked ``criterion(k)`` get one PASS/FAIL line in the terminal summary,
# with any ``("detail", text)`` the test stored in ``user_properties``.

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _CRITERIA[mark.args[0]] = ("PASS" if report.passed else "FAIL", item.name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        status, name, detail = _CRITERIA[k]
        terminalreporter.write_line(f"{status} criterion {k} ({name}){': ' + detail if detail else ''}")
