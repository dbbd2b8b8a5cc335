"""Shared fixtures: the reference chaotic series is expensive, so it is
built once per session, and the acceptance tests register one summary line
per criterion that is printed after the run."""

import numpy as np
import pytest

import chaosid as ci

ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE_LINES[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        passed, detail = ACCEPTANCE_LINES[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict} - {detail}")


@pytest.fixture(scope="session")
def rossler_series():
    """x1 of the reference chaotic system: dt=0.05, 20000 samples after a
    2000-step transient."""
    trajectory = ci.rk4_integrate(
        ci.rossler(), np.array([1.0, 1.0, 1.0]), dt=0.05,
        steps=20000, transient_skip=2000,
    )
    return ci.TimeSeries(trajectory.channel(0), dt=0.05, labels=("x1",))


@pytest.fixture(scope="session")
def rossler_embedding(rossler_series):
    tau = ci.average_mutual_information(rossler_series, max_lag=100).lag
    m = ci.false_nearest_neighbors(rossler_series, tau=tau).m
    return ci.delay_embed(rossler_series, tau=tau, m=m)
