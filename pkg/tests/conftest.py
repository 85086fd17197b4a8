"""Shared parameter sets for the test suite."""

import pytest

from ratchet import ModelParams, solve

MARKET = dict(r=0.015, mu=0.085, sigma=0.25, delta=0.02)


@pytest.fixture
def base_params():
    """gamma = 2, alpha = 5, beta = 10."""
    return ModelParams(**MARKET, gamma=2.0, alpha=5.0, beta=10.0)


@pytest.fixture
def wide_params():
    """gamma = 2, alpha = 5, beta = 100."""
    return ModelParams(**MARKET, gamma=2.0, alpha=5.0, beta=100.0)


@pytest.fixture
def base_band(base_params):
    return solve(base_params)


@pytest.fixture
def wide_band(wide_params):
    return solve(wide_params)


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
