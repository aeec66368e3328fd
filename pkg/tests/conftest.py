import pytest

from fluxmod.transmon import QubitBand, calibrate, static_coeffs


@pytest.fixture(scope="session")
def dev4():
    """The 5.1/4.1/0.2 GHz asymmetric tunable transmon."""
    return calibrate(QubitBand(5.1e9, 4.1e9, 0.2e9))


@pytest.fixture(scope="session")
def dev5():
    """The 5.1/4.5/0.2 GHz tunable transmon of the gate study."""
    return calibrate(QubitBand(5.1e9, 4.5e9, 0.2e9))


@pytest.fixture(scope="session")
def coeffs4(dev4):
    return static_coeffs(dev4)


@pytest.fixture(scope="session")
def coeffs5(dev5):
    return static_coeffs(dev5)
