import math

import numpy as np
import pytest

from src.control import analyze
from src.exceptions import HeisenbergViolationError, InvalidParameterError
from src.plant import (
    ab_params,
    force_referred_spectrum,
    noise_from_ab,
    output_spectrum,
    purity_mu,
    regularized,
    response,
    sql_beating_factor,
    sql_force,
)
from src.schemas import MarkovianNoise, Oscillator, SystemModel

from .conftest import SQRT2


def test_response_of_damped_oscillator():
    osc = Oscillator(omega_p=1.3, gamma_p=0.2)
    w = np.array([0.0, 0.7, 2.0])
    want = -1.0 / ((w - 1.3 + 0.2j) * (w + 1.3 + 0.2j))
    assert np.allclose(response(osc)(w), want)


def test_unit_model_parameters(unit_model):
    assert ab_params(unit_model) == pytest.approx((1.0, SQRT2))
    assert purity_mu(unit_model.noise) == pytest.approx(1.0)


def test_heisenberg_violation_is_rejected():
    with pytest.raises(HeisenbergViolationError):
        purity_mu(MarkovianNoise(s_zz=0.5, s_ff=1.0))


def test_noise_from_ab_hits_targets():
    noise = noise_from_ab(-0.4, 2.5, omega_p=1.0)
    a, b = ab_params(SystemModel(osc=Oscillator(omega_p=1.0), noise=noise))
    assert a / b == pytest.approx(-0.4, rel=1e-12)
    assert purity_mu(noise) == pytest.approx(2.5, rel=1e-12)


def test_noise_from_ab_rejects_out_of_range():
    with pytest.raises(InvalidParameterError):
        noise_from_ab(1.0, 2.0)
    with pytest.raises(HeisenbergViolationError):
        noise_from_ab(0.2, 0.9)


def test_output_spectrum_pointwise(damped_model):
    osc, n = damped_model.osc, damped_model.noise
    w = 0.8
    r = complex(response(osc)(w))
    want = n.s_zz + 2 * r.real * n.s_zf + n.s_ff * abs(r) ** 2
    assert complex(output_spectrum(damped_model)(w)).real == pytest.approx(want, rel=1e-12)


def test_force_referred_spectrum_is_polynomial(unit_model):
    s_g = force_referred_spectrum(unit_model)
    # S_G = S_ZZ |P|^2 + S_FF for S_ZF = 0 and gamma_p = 0
    assert complex(s_g(2.0)).real == pytest.approx(9.0 + 1.0)


def test_sql_beating_matches_closed_form(unit_model):
    eta2, omega = sql_beating_factor(unit_model)
    assert eta2 == pytest.approx(math.sqrt((SQRT2 - 1) / (SQRT2 + 1)), rel=1e-8)
    assert omega > 0


def test_regularized_floors_gamma_only_when_needed(unit_model, damped_model):
    assert regularized(unit_model).osc.gamma_p == pytest.approx(1e-9)
    assert regularized(damped_model) is damped_model


def test_free_mass_uses_measurement_frequency_scale():
    model = SystemModel(osc=Oscillator(omega_p=0.0),
                        noise=MarkovianNoise(s_zz=0.25, s_ff=4.0), omega_q=2.0)
    a, b = ab_params(model)
    assert a == pytest.approx(0.0)
    # b = sqrt(S_FF/S_ZZ) = 4 over omega_q^2 = 4
    assert b == pytest.approx(1.0)


def test_sql_force_is_quadratic():
    assert sql_force(2.0) == pytest.approx(8.0)
    assert np.allclose(sql_force([0.0, 1.0, 3.0]), [0.0, 2.0, 18.0])


@pytest.mark.parametrize("c", [0.8, 2.5, 1e4])
def test_ab_invariant_under_joint_noise_rescaling(c):
    base = SystemModel(osc=Oscillator(omega_p=1.0), noise=noise_from_ab(0.3, 1.5))
    model = base.model_copy(update={"noise": base.noise.scaled(c)})
    assert ab_params(model) == pytest.approx(ab_params(base), rel=1e-12)
    assert purity_mu(model.noise) == pytest.approx(c * purity_mu(base.noise), rel=1e-12)
    assert analyze(model).metrics.u_ctrl == pytest.approx(c * analyze(base).metrics.u_ctrl, rel=1e-9)
