import os
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


SUITE_BUDGET_S = 120.0


def pytest_sessionstart(session):
    session.config._dynimage_t0 = time.perf_counter()


def pytest_terminal_summary(terminalreporter, config):
    t0 = getattr(config, "_dynimage_t0", None)
    if t0 is None:
        return
    elapsed = time.perf_counter() - t0
    ok = elapsed < SUITE_BUDGET_S
    terminalreporter.write_line(
        f"[{'PASS' if ok else 'FAIL'}] criterion 10: whole-suite runtime {elapsed:.1f} s (< {SUITE_BUDGET_S:.0f} s)"
    )
