import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from quasiforce.kernel import StepKernel

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_OUTCOMES: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        prev = _OUTCOMES.get(number, (title, True))[1]
        _OUTCOMES[number] = (title, prev and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        title, ok = _OUTCOMES[number]
        terminalreporter.write_line(f"criterion {number:2d} ({title}): {'PASS' if ok else 'FAIL'}")


@pytest.fixture
def example_kernel():
    h = Fraction(1, 2)
    return StepKernel([Fraction(1, 3), Fraction(2, 3)], [[h, Fraction(1, 4)], [Fraction(1, 4), Fraction(3, 4)]])


@pytest.fixture
def rng():
    return random.Random(12345)
