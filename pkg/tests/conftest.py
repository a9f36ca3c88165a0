import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _quiet_expansion_warnings():
    # parameter-regime warnings are exercised explicitly where they matter
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        yield


ACCEPTANCE_LINES = {}


def record_criterion(key: str, ok: bool, detail: str):
    ACCEPTANCE_LINES[key] = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[key])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("abcdefgh")), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
