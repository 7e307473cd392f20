import pytest

from helpers import ACCEPTANCE_LINES

from peakval.model import case_study_config, case_study_grid
from peakval.scenario import SyntheticParams, generate_synthetic


@pytest.fixture(scope="session")
def cfg():
    return case_study_config()


@pytest.fixture(scope="session")
def synthetic():
    """Default 31 x 4 synthetic lattice (seed 7)."""
    return generate_synthetic(SyntheticParams(), seed=7)


@pytest.fixture(scope="session")
def small_synthetic():
    """3-day x 2-scenario lattice for quick end-to-end runs."""
    return generate_synthetic(SyntheticParams(G=3, N_S=2), seed=11)


@pytest.fixture(scope="session")
def grid41(cfg):
    return case_study_grid(cfg)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
