import math

import pytest

from src.control import analyze
from src.optics import (
    alpha_from_power,
    classical_factor,
    classical_factor_numeric,
    fig2_right_sweep,
    minimize_occupation,
    omega_q_from_alpha,
    readout_mu,
    to_markovian,
)
from src.schemas import ClassicalBudget, Oscillator, ReadoutConfig, SystemModel
from src.units import HBAR_SI


def free_mass(cfg: ReadoutConfig) -> SystemModel:
    return SystemModel(osc=Oscillator(omega_p=0.0), noise=to_markovian(cfg), omega_q=cfg.omega_q)


def test_phase_quadrature_vacuum_readout():
    noise = to_markovian(ReadoutConfig(omega_q=2.0))
    assert noise.s_zz == pytest.approx(0.25)
    assert noise.s_ff == pytest.approx(4.0)
    assert noise.s_zf == 0.0


def test_lossless_squeezed_readout_is_quantum_limited():
    cfg = ReadoutConfig(omega_q=0.7, phi=0.3, squeeze_db=10.0, squeeze_angle=0.7)
    assert readout_mu(cfg) == pytest.approx(1.0, abs=1e-10)
    assert readout_mu(cfg.model_copy(update={"loss": 0.1})) > 1.0


def test_phase_quadrature_free_mass_does_not_beat_sql():
    met = analyze(free_mass(ReadoutConfig(omega_q=1.0))).metrics
    assert met.eta2 == pytest.approx(1.0)
    assert met.n_eff == pytest.approx((1.0 + math.sqrt(2.0)) / 2 - 0.5)
    assert met.n_eff >= 0.5


def test_amplitude_quadrature_is_rejected():
    with pytest.raises(ValueError):
        ReadoutConfig(omega_q=1.0, phi=math.pi / 2)


def test_classical_factor_numeric_minimum():
    cfg = ReadoutConfig(omega_q=1.3, zeta_f=0.2, zeta_x=0.05)
    value, omega = classical_factor_numeric(cfg)
    assert value == pytest.approx(classical_factor(cfg), rel=1e-8)
    assert omega > 0


def test_budget_split_keeps_product():
    zeta_f, zeta_x = ClassicalBudget(eta_cl2=0.02, force_share=0.7).split()
    assert 2 * zeta_f * zeta_x == pytest.approx(0.02)
    assert zeta_f > zeta_x


def test_optimized_homodyne_angle_beats_phase_quadrature():
    free = minimize_occupation(0.0, 0.0, loss=0.01, grid_points=12)
    phase = minimize_occupation(0.0, 0.0, loss=0.01, fix_phi=0.0, grid_points=12)
    assert free.n_eff < 0.5 <= phase.n_eff
    assert abs(free.config.phi) < math.pi / 2


def test_power_to_measurement_frequency():
    alpha = alpha_from_power(1.77e15, 8e5, 0.014)
    assert alpha > 0
    assert omega_q_from_alpha(alpha, 40.0) == pytest.approx(alpha / math.sqrt(HBAR_SI * 40.0))


def test_fig2_right_sweep_rows():
    table = fig2_right_sweep([0.0, 0.05], squeeze_levels=(0.0,), grid_points=12)
    assert list(table.columns) == ["eta_cl2", "squeeze_db", "n_eff", "omega_q", "phi",
                                   "squeeze_angle", "converged"]
    assert table["eta_cl2"].tolist() == [0.0, 0.05]
    assert table["n_eff"].iloc[1] >= table["n_eff"].iloc[0] - 1e-4
