import math

import numpy as np
import pytest

from src.colddamp import (
    critical_temperature,
    fig2_left_sweep,
    minimize_over_strength,
    n_opt,
    occupation_grid,
    occupation_vs_strength,
    optimal_strength,
    thermal_model,
)
from src.exceptions import InvalidParameterError, OutOfRegimeError
from src.plant import ab_params, purity_mu
from src.schemas import ThermalEnvironment
from src.units import HBAR_SI, K_B_SI


def test_n_opt_values(fixtures):
    assert n_opt(0.1) == pytest.approx(fixtures["cold_damping"]["n_opt_0.1"], abs=1e-7)
    assert n_opt(1.0) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)


def test_above_critical_temperature_is_out_of_regime():
    with pytest.raises(OutOfRegimeError):
        n_opt(1.5)
    with pytest.raises(OutOfRegimeError):
        optimal_strength(1.0)
    with pytest.raises(InvalidParameterError):
        n_opt(-0.1)


def test_thermal_model_invariants():
    model = thermal_model(0.4, 2.5)
    a, b = ab_params(model)
    assert purity_mu(model.noise) ** 2 == pytest.approx(1 + math.sqrt(2) * 0.4 / 2.5)
    assert a == pytest.approx(1.0)
    assert b ** 2 == pytest.approx(1 + 2.5 ** 2 + math.sqrt(2) * 0.4 * 2.5)


@pytest.mark.parametrize("theta", [0.1, 0.5, 0.9])
def test_numerical_minimum_follows_closed_form(theta):
    best = minimize_over_strength(theta)
    assert best.interior
    assert best.n_eff == pytest.approx(n_opt(theta), abs=1e-6)
    assert math.sqrt(best.x) == pytest.approx(optimal_strength(theta), rel=1e-4)


def test_hot_bath_prefers_strongest_measurement():
    best = minimize_over_strength(2.0)
    assert not best.interior
    curve = occupation_grid(10.0, np.logspace(-2, 6, 200))
    assert np.all(np.diff(curve) < 0)
    assert curve[-1] == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-3)


def test_vectorized_grid_matches_pipeline():
    assert float(occupation_grid(0.3, 1.7)) == pytest.approx(occupation_vs_strength(0.3, 1.7), rel=1e-10)


def test_critical_temperature():
    env = ThermalEnvironment(temperature=1e-3, quality_factor=1e6, omega_p=2 * math.pi * 1e3)
    t_c, theta = critical_temperature(env)
    assert t_c == pytest.approx(HBAR_SI * env.omega_p * 1e6 / (2 * math.sqrt(2) * K_B_SI))
    assert theta == pytest.approx(1e-3 / t_c)


def test_fig2_left_table_layout():
    table = fig2_left_sweep([0.5, 2.0], [0.1, 1.0, 10.0], workers=2)
    assert list(table.columns) == ["theta", "x", "n_eff", "u_ctrl", "q_eff", "eta2", "mu", "a_over_b"]
    assert table["theta"].tolist() == [0.5, 0.5, 0.5, 2.0, 2.0, 2.0]
    assert table["x"].tolist() == [0.1, 1.0, 10.0] * 2
    assert (table["n_eff"] > 0).all()


def test_fig2_left_rejects_nonpositive_strength():
    with pytest.raises(InvalidParameterError):
        fig2_left_sweep([0.5], [0.0, 1.0])
