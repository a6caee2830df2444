import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from etapt.fock import FockSpace  # noqa: E402


@pytest.fixture
def space():
    return FockSpace(64, 8)


@pytest.fixture
def small():
    return FockSpace(8, 2)


# --- acceptance summary -----------------------------------------------------------
# Each acceptance criterion records one verdict line; they are printed together
# at the end of the session so that they appear even with output capture on.

_VERDICTS = {}


class _Criterion:
    def __init__(self, number):
        self.number = number

    def __call__(self, passed, detail):
        line = f"criterion {self.number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        _VERDICTS[self.number] = line
        print(line)
        return passed


@pytest.fixture
def criterion(request):
    return _Criterion(request.node.get_closest_marker("criterion").args[0])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[number])
