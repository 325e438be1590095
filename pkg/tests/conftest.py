from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from superkilling.charts import Chart

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def R12():
    return Chart("M", ("t",), ("xi1", "xi2"), {"t": (0.1, 3.0)})


@pytest.fixture
def R04():
    return Chart("P", ("x",), ("a1", "a2", "a3", "a4"), {"x": (0.5, 2.0)})


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion."""
    state = {}

    def _set(number: int, label: str):
        state["key"] = (number, label)
    yield _set
    if "key" in state:
        number, label = state["key"]
        failed = getattr(request.node, "rep_call", None)
        ok = failed is not None and failed.passed
        CRITERIA[number] = (ok, label)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {label}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, label = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {label}")
