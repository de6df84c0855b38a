import functools

import numpy as np
import pytest

from tunneltime import PotentialSpec, RunConfig, arrival_analysis, make_band

PAPER_U = (0.1, 0.3, 0.53, 0.55, 0.65)

# criterion lines collected by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES = {}


@functools.lru_cache(maxsize=None)
def report_for(u):
    """Arrival analysis of the default scenario; u=None means the free particle."""
    config = RunConfig({})
    if u is None:
        return arrival_analysis(config.scenario(potential=PotentialSpec()))
    return arrival_analysis(config.scenario(u))


@pytest.fixture(scope="session")
def paper_band():
    return make_band(0.2, 0.4, 1601)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
