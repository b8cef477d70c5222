import numpy as np
import pytest
from hypothesis import settings

from rfwave.experiments import PROFILE_GRID
from rfwave.operator import RieszFellerParams, calibrate_constants
from rfwave.profile import FluxFunction, WaveData, classical_profile, fractional_profile

settings.register_profile("rfwave", max_examples=40, deadline=None, derandomize=True)
settings.load_profile("rfwave")


@pytest.fixture(scope="session")
def burgers():
    return FluxFunction.burgers()


@pytest.fixture(scope="session")
def wave10(burgers):
    return WaveData.from_flux(burgers, 1.0, 0.0)


@pytest.fixture(scope="session")
def classical(burgers, wave10):
    return classical_profile(burgers, wave10, PROFILE_GRID)


@pytest.fixture(scope="session")
def fractional(burgers, wave10):
    return fractional_profile(RieszFellerParams(1.5, 0.0), burgers, wave10, PROFILE_GRID)


@pytest.fixture(scope="session")
def consts_skew():
    return calibrate_constants(RieszFellerParams(1.5, 0.3))


@pytest.fixture(scope="session")
def consts_sym():
    return calibrate_constants(RieszFellerParams(1.5, 0.0))


def gaussian(x, w=1.0):
    return np.exp(-((x / w) ** 2))


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.LINES:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.LINES:
            terminalreporter.write_line(line)
