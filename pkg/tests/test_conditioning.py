import math

import numpy as np
import pytest

from src.conditioning import (
    conditional_covariance_general,
    conditional_covariance_markovian,
    conditional_covariance_wiener,
    conditional_state,
    g_x_zero_check,
    kalman_filters,
    wiener_filter,
    wiener_filters,
)
from src.exceptions import InvalidParameterError
from src.plant import cross_spectrum_xy, noise_from_ab, output_spectrum, regularized
from src.ratfun import Polynomial, RationalFunction, spectral_factorize
from src.schemas import MarkovianNoise, Oscillator, SystemModel
from src.units import HBAR


def test_unit_model_conditional_state(unit_model, fixtures):
    state = conditional_state(unit_model)
    want = fixtures["markovian"]["v_cond"]
    assert (state.v_xx, state.v_pp, state.v_xp) == pytest.approx(want, rel=1e-6)


@pytest.mark.parametrize("ratio,mu", [(-0.8, 1.0), (0.0, 3.0), (0.6, 1.7), (0.95, 8.0)])
def test_closed_form_matches_riccati(ratio, mu):
    model = SystemModel(osc=Oscillator(omega_p=1.0), noise=noise_from_ab(ratio, mu))
    closed = conditional_state(model)
    riccati = conditional_covariance_general(model)
    assert riccati.v_xx == pytest.approx(closed.v_xx, rel=1e-8)
    assert riccati.v_pp == pytest.approx(closed.v_pp, rel=1e-8)
    scale = math.sqrt(closed.v_xx * closed.v_pp)
    assert abs(riccati.v_xp - closed.v_xp) <= 1e-8 * scale
    assert closed.purity == pytest.approx(mu * HBAR / 2, rel=1e-12)


def test_wiener_route_matches_riccati_for_damped_plant(damped_model):
    riccati = conditional_covariance_general(damped_model)
    wiener = conditional_covariance_wiener(damped_model)
    scale = math.sqrt(riccati.v_xx * riccati.v_pp)
    assert wiener.v_xx == pytest.approx(riccati.v_xx, rel=1e-6)
    assert wiener.v_pp == pytest.approx(riccati.v_pp, rel=1e-6)
    assert abs(wiener.v_xp - riccati.v_xp) <= 1e-6 * scale


def test_wiener_and_kalman_filters_agree(damped_model):
    wiener = wiener_filters(damped_model)
    kalman = kalman_filters(damped_model)
    for w in (0.0, 0.5, 1.0, 3.0):
        assert complex(wiener.k_x(w)) == pytest.approx(complex(kalman.k_x(w)), rel=1e-6)
        assert complex(wiener.k_p(w)) == pytest.approx(complex(kalman.k_p(w)), rel=1e-6)


def test_cross_covariance_vanishes_with_dc_gain():
    # A = B limit is excluded; A/B = 0.5 gives V_xp > 0 and G_x(0) != 0
    model = SystemModel(osc=Oscillator(omega_p=1.0), noise=noise_from_ab(0.5, 1.0))
    g0, v4, consistent = g_x_zero_check(model)
    assert consistent
    assert v4 > 0


def test_markovian_closed_form_rejects_bad_parameters():
    with pytest.raises(InvalidParameterError):
        conditional_covariance_markovian(2.0, 1.0, 1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        conditional_covariance_markovian(0.5, 1.0, 1.0, 0.0)


def test_free_mass_state_is_pure_for_quantum_limited_noise():
    model = SystemModel(osc=Oscillator(omega_p=0.0),
                        noise=MarkovianNoise(s_zz=1.0, s_ff=1.0), omega_q=1.0)
    assert conditional_state(model).purity == pytest.approx(HBAR / 2)


def test_wiener_filter_of_white_output_is_identity():
    phi = RationalFunction(1.0, Polynomial([1j, 1.0]))
    k = wiener_filter(phi * phi.conj(), phi)
    assert np.allclose(k(np.linspace(-3.0, 3.0, 13)), 1.0)


def test_wiener_filter_matches_filter_pair(damped_model):
    reg = regularized(damped_model)
    phi = spectral_factorize(output_spectrum(reg))
    k_x = wiener_filter(cross_spectrum_xy(reg), phi)
    w = np.linspace(0.2, 4.0, 15)
    assert np.allclose(k_x(w), wiener_filters(damped_model).k_x(w), rtol=1e-8)
