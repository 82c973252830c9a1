import numpy as np
import pytest

from choquard.grid import make_grid
from choquard.models import make_nonlinearity, make_potential
from choquard.riesz import plan_riesz
from choquard.functionals import Problem

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    num, title = mark.args
    status = "PASS" if rep.passed else "FAIL"
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    ACCEPTANCE_LINES[num] = f"criterion {num:2d} {status}  {title}" + (f"  [{detail}]" if detail else "")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[num])


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(3, 12.0, 24)


@pytest.fixture(scope="session")
def small_plan(small_grid):
    return plan_riesz(small_grid, 2.0)


@pytest.fixture(scope="session")
def pekar_problem(small_grid, small_plan):
    return Problem(small_grid, small_plan, make_potential("constant", 3, 2.0, Vinf=1.0),
                   make_nonlinearity("pekar"))


@pytest.fixture(scope="session")
def remark_problem(small_grid, small_plan):
    return Problem(small_grid, small_plan, make_potential("remark14_i", 3, 2.0, a=3, b=1),
                   make_nonlinearity("pekar"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
