"""Conditional state of the oscillator given the past measurement record."""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from .exceptions import (
    HeisenbergViolationError,
    InvalidParameterError,
    ModelDegeneracyError,
)
from .plant import (
    ab_params,
    cross_spectrum_xy,
    output_spectrum,
    position_spectrum,
    purity_mu,
    regularized,
)
from .ratfun import OMEGA, Polynomial, RationalFunction, causal_part, integrate_spectrum, spectral_factorize
from .schemas import GaussianState, SystemModel
from .units import HBAR

logger = logging.getLogger(__name__)

CARE_RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True)
class WienerFilterPair:
    """Causal estimators x_hat = k_x y and p_hat = k_p y."""
    k_x: RationalFunction
    k_p: RationalFunction


def conditional_covariance_markovian(a: float, b: float, mu: float,
                                     omega_p: float) -> GaussianState:
    """Closed-form conditional covariance of a Markovian model.

    Args:
        a: A parameter of the output spectrum.
        b: B parameter, |A| <= B.
        mu: Measurement purity, >= 1.
        omega_p: Frequency scale the (A, B) pair was formed with.

    Returns:
        GaussianState with purity exactly mu hbar / 2.

    Raises:
        InvalidParameterError: A > B, A + B <= 0 or a nonpositive scale.
    """
    if omega_p <= 0:
        raise InvalidParameterError(f"frequency scale {omega_p} must be positive")
    if a > b * (1 + 1e-12) or a + b <= 0:
        raise InvalidParameterError(f"need |A| <= B, got A={a:.9g}, B={b:.9g}")
    if mu < 1 - 1e-12:
        raise HeisenbergViolationError(f"mu = {mu:.9g} < 1")
    half = HBAR * mu / 2.0
    return GaussianState(
        v_xx=half / omega_p * math.sqrt(2.0 / (a + b)),
        v_pp=half * omega_p * math.sqrt(2.0 * b * b / (a + b)),
        v_xp=half * math.sqrt(max(b - a, 0.0) / (b + a)),
    )


def conditional_state(model: SystemModel) -> GaussianState:
    """Closed-form conditional state of ``model`` (free masses included)."""
    a, b = ab_params(model)
    state = conditional_covariance_markovian(a, b, purity_mu(model.noise), model.frequency_scale)
    return state.require_physical()


def _state_space(model: SystemModel) -> Tuple[np.ndarray, ...]:
    w2 = model.osc.omega_p ** 2 + model.osc.gamma_p ** 2
    drift = np.array([[0.0, 1.0], [-w2, -2.0 * model.osc.gamma_p]])
    obs = np.array([[1.0, 0.0]])
    n = model.noise
    process = np.diag([0.0, n.s_ff / 2.0])
    sensing = np.array([[n.s_zz / 2.0]])
    cross = np.array([[0.0], [n.s_zf / 2.0]])
    return drift, obs, process, sensing, cross


def _riccati(model: SystemModel) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stabilizing filter Riccati solution, Kalman gain, drift and observation."""
    drift, obs, process, sensing, cross = _state_space(model)
    try:
        cov = linalg.solve_continuous_are(drift.T, obs.T, process, sensing, s=cross)
    except (linalg.LinAlgError, ValueError) as exc:
        raise ModelDegeneracyError(f"filter Riccati equation has no solution: {exc}") from exc
    cov = 0.5 * (cov + cov.T)
    gain = (cov @ obs.T + cross) @ np.linalg.inv(sensing)
    residual = (drift @ cov + cov @ drift.T + process
                - (cov @ obs.T + cross) @ np.linalg.inv(sensing) @ (obs @ cov + cross.T))
    scale = max(np.abs(process).max(), np.abs(cov).max() * np.abs(drift).max(), 1e-300)
    if np.abs(residual).max() > CARE_RESIDUAL_RTOL * scale:
        raise ModelDegeneracyError(
            f"Riccati residual {np.abs(residual).max():.3e} above tolerance"
        )
    closed = drift - gain @ obs
    if np.any(np.linalg.eigvals(closed).real >= 0):
        raise ModelDegeneracyError("Riccati solution is not stabilizing")
    return cov, gain, drift, obs


def conditional_covariance_general(model: SystemModel) -> GaussianState:
    """Steady-state Kalman-Bucy error covariance of (x, p).

    Solves the filter Riccati equation for dx = p dt,
    dp = -(w_p^2 + g_p^2) x dt - 2 g_p p dt + F dt with y = x + Z and
    white-noise intensities S_FF/2, S_ZZ/2, cross S_ZF/2.

    Raises:
        ModelDegeneracyError: no stabilizing solution.
    """
    cov, _, _, _ = _riccati(model)
    return GaussianState.from_matrix(cov)


def kalman_filters(model: SystemModel) -> WienerFilterPair:
    """Frequency responses of the steady-state estimator.

    x_hat(s) = (sI - A + L C)^-1 L y(s), with s = -i Omega.
    """
    _, gain, drift, obs = _riccati(model)
    closed = drift - gain @ obs
    eig = np.linalg.eigvals(closed)
    s = OMEGA * -1j
    den = Polynomial.from_roots(1j * eig, -1.0)  # det(sI - F) in Omega
    l1, l2 = gain[0, 0], gain[1, 0]
    num_x = (s - closed[1, 1]) * l1 + closed[0, 1] * l2
    num_p = closed[1, 0] * l1 + (s - closed[0, 0]) * l2
    return WienerFilterPair(RationalFunction(num_x, den), RationalFunction(num_p, den))


def wiener_filter(s_ay: RationalFunction, phi_plus: RationalFunction) -> RationalFunction:
    """K_a = (1/phi_+) [S_ay / phi_+^*]_+."""
    gain = causal_part(s_ay / phi_plus.conj())
    return (gain / phi_plus).reduced()


def _require_oscillator(model: SystemModel) -> None:
    if model.osc.omega_p <= 0:
        raise InvalidParameterError(
            "frequency-domain filtering needs omega_p > 0; use the closed form "
            "or the Riccati route for a free mass"
        )


def whitened_gains(model: SystemModel) -> Tuple[RationalFunction, RationalFunction, RationalFunction]:
    """(phi_+, G_x, G_p) for a regularized copy of ``model``."""
    _require_oscillator(model)
    reg = regularized(model)
    phi = spectral_factorize(output_spectrum(reg))
    s_xy = cross_spectrum_xy(reg)
    s_py = s_xy * (OMEGA * -1j)
    g_x = causal_part(s_xy / phi.conj())
    g_p = causal_part(s_py / phi.conj())
    return phi, g_x, g_p


def wiener_filters(model: SystemModel) -> WienerFilterPair:
    phi, g_x, g_p = whitened_gains(model)
    inv = RationalFunction(phi.den, phi.num)
    return WienerFilterPair((g_x * inv).reduced(), (g_p * inv).reduced())


def conditional_covariance_wiener(model: SystemModel) -> GaussianState:
    """Conditional covariance from the residual spectra of the Wiener filters.

    V_aa = int (S_aa - |G_a|^2) dOmega/2pi on a regularized plant. Accurate
    when gamma_p is well above the floor; the cancellation between the two
    terms costs about eps/gamma_p in relative precision.
    """
    _, g_x, g_p = whitened_gains(model)
    reg = regularized(model)
    s_xx = position_spectrum(reg).rat
    s_pp = s_xx * (OMEGA * OMEGA)
    v_xx = integrate_spectrum(s_xx - g_x * g_x.conj())
    v_pp = integrate_spectrum(s_pp - g_p * g_p.conj())
    v_xp = -integrate_spectrum((g_x * g_p.conj() + g_x.conj() * g_p) * 0.5)
    return GaussianState(v_xx=v_xx, v_pp=v_pp, v_xp=v_xp)


def g_x_zero_check(model: SystemModel, atol: float = 1e-6) -> Tuple[float, float, bool]:
    """Numerical check that V_xp^c vanishes together with G_x(0).

    G_x(0) here is the zero-frequency gain, not the kernel at t = 0+.

    Returns:
        (|G_x(0)|^2, 4 V_xp^c, whether both vanish or both do not).
    """
    _, g_x, _ = whitened_gains(model)
    g0 = abs(complex(g_x(0.0))) ** 2
    v4 = 4.0 * conditional_state(model).v_xp
    return g0, v4, (g0 < atol) == (v4 < atol)
