import math

import pytest

from src.schemas import MarkovianNoise, Oscillator, SystemModel
from src.testing import load_fixtures


@pytest.fixture(scope="session")
def fixtures():
    return load_fixtures()


@pytest.fixture
def unit_model():
    """omega_p = 1, S_ZZ = S_FF = 1, S_ZF = 0: A = 1, B = sqrt(2), mu = 1."""
    return SystemModel(osc=Oscillator(omega_p=1.0), noise=MarkovianNoise(s_zz=1.0, s_ff=1.0))


@pytest.fixture
def damped_model():
    return SystemModel(osc=Oscillator(omega_p=1.0, gamma_p=0.1),
                       noise=MarkovianNoise(s_zz=1.0, s_ff=1.0))


@pytest.fixture
def degenerate_model():
    """B - A is ~5e-15 B: the optimal loop would need an infinite Q_eff."""
    return SystemModel(osc=Oscillator(omega_p=1.0),
                       noise=MarkovianNoise(s_zz=1.0, s_ff=1e14 + 1.0, s_zf=1e7))


SQRT2 = math.sqrt(2.0)
