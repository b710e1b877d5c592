import numpy as np
import pytest

from schauder.domain import box, build_grid_domain, interval, l_shape

_acceptance = {}


@pytest.fixture(scope="session")
def unit_interval_01():
    return build_grid_domain(interval(), 0.01)


@pytest.fixture(scope="session")
def square_005():
    return build_grid_domain(box((0, 1), (0, 1)), 0.05)


@pytest.fixture(scope="session")
def lshape_005():
    return build_grid_domain(l_shape(), 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    crit = item.get_closest_marker("criterion")
    if crit is not None and rep.when == "call":
        key = crit.args[0]
        ok = rep.passed and _acceptance.get(key, True)
        _acceptance[key] = ok


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance):
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if _acceptance[key] else 'FAIL'}")
