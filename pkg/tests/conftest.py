import sys

import pytest
from hypothesis import HealthCheck, settings

from qtw import instantons as inst
from qtw import twistoralg as tw

settings.register_profile(
    "qtw", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("qtw")


@pytest.fixture(scope="session")
def twistor():
    return tw.build_twistor_system(None)


@pytest.fixture(scope="session")
def bsector1():
    return tw.build_twistor_system(tw.BSector(1))


@pytest.fixture(scope="session")
def thooft():
    return inst.build_thooft(1)


@pytest.fixture(scope="session")
def adhm11():
    return inst.build_adhm(1, 1)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.RESULTS:
        terminalreporter.write_line(line)
