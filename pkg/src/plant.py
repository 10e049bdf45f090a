"""Oscillator and Markovian noise models.

The plant is a unit-mass oscillator read out as y = x + Z and driven by a
force F (plus the feedback force). All spectra are single-sided.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy import optimize

from .exceptions import HeisenbergViolationError, InvalidNoiseError, InvalidParameterError
from .ratfun import Polynomial, RationalFunction, SpectralDensity
from .schemas import MarkovianNoise, Oscillator, SystemModel
from .units import HBAR

logger = logging.getLogger(__name__)

GAMMA_FLOOR_RTOL = 1e-9
HEISENBERG_RTOL = 1e-12


def _p_polynomial(osc: Oscillator) -> Polynomial:
    """P(Omega) = (Omega - w + i g)(Omega + w + i g)."""
    return Polynomial.from_roots(
        [osc.omega_p - 1j * osc.gamma_p, -osc.omega_p - 1j * osc.gamma_p]
    )


def response(osc: Oscillator) -> RationalFunction:
    """R_xx = -1 / [(Omega - w_p + i g_p)(Omega + w_p + i g_p)]."""
    return RationalFunction(Polynomial.constant(-1.0), _p_polynomial(osc))


def purity_mu(noise: MarkovianNoise) -> float:
    """Measurement purity mu = sqrt(S_ZZ S_FF - S_ZF^2) / hbar.

    Raises:
        HeisenbergViolationError: mu < 1.
    """
    det = noise.determinant
    if det < HBAR ** 2 * (1 - HEISENBERG_RTOL):
        raise HeisenbergViolationError(
            f"S_ZZ S_FF - S_ZF^2 = {det:.9g} is below hbar^2 (mu = "
            f"{math.sqrt(max(det, 0.0)) / HBAR:.9g})"
        )
    return math.sqrt(det) / HBAR


def homogeneous_params(model: SystemModel) -> Tuple[float, float]:
    """(a, b) with a = w_p^2 + S_ZF/S_ZZ, b = sqrt(w_p^4 + 2 w_p^2 S_ZF/S_ZZ + S_FF/S_ZZ).

    Every closed form of the optimal loop depends on the model only through
    these two frequencies squared; A = a/w_s^2 and B = b/w_s^2.

    Raises:
        InvalidNoiseError: b^2 <= 0.
    """
    w2 = model.osc.omega_p ** 2
    zf = model.noise.s_zf / model.noise.s_zz
    ff = model.noise.s_ff / model.noise.s_zz
    b2 = w2 * w2 + 2.0 * w2 * zf + ff
    if b2 <= 0:
        raise InvalidNoiseError(f"B^2 = {b2:.6g} is not positive")
    return w2 + zf, math.sqrt(b2)


def ab_params(model: SystemModel) -> Tuple[float, float]:
    """Dimensionless (A, B) of the output spectrum.

    For omega_p > 0 this is A = 1 + S_ZF/(w_p^2 S_ZZ),
    B = sqrt(1 + 2 S_ZF/(w_p^2 S_ZZ) + S_FF/(w_p^4 S_ZZ)). A free mass uses its
    substitute frequency scale in place of w_p.
    """
    a, b = homogeneous_params(model)
    scale2 = model.frequency_scale ** 2
    big_a, big_b = a / scale2, b / scale2
    if abs(big_a) > big_b * (1 + 1e-12):
        raise InvalidNoiseError(f"|A| = {abs(big_a):.9g} exceeds B = {big_b:.9g}")
    return big_a, big_b


def noise_from_ab(a_over_b: float, mu: float, omega_p: float = 1.0,
                  s_zz: float = 1.0) -> MarkovianNoise:
    """Noise triple realizing a given A/B and mu on an oscillator at ``omega_p``.

    Args:
        a_over_b: Target A/B in (-1, 1).
        mu: Target measurement purity, >= 1.
        omega_p: Oscillator frequency (0 for a free mass).
        s_zz: Sensing-noise level; A/B and mu do not depend on it.

    Returns:
        MarkovianNoise with the requested invariants.
    """
    if not -1.0 < a_over_b < 1.0:
        raise InvalidParameterError(f"A/B = {a_over_b} must lie in (-1, 1)")
    if mu < 1.0:
        raise HeisenbergViolationError(f"mu = {mu} < 1")
    w2 = omega_p ** 2
    b = mu * HBAR / (s_zz * math.sqrt(1.0 - a_over_b ** 2))
    a = a_over_b * b
    s_zf = s_zz * (a - w2)
    s_ff = s_zz * ((b - w2) ** 2 + 2.0 * w2 * (b - a))
    return MarkovianNoise(s_zz=s_zz, s_ff=s_ff, s_zf=s_zf)


def regularized(model: SystemModel) -> SystemModel:
    """Model with gamma_p floored at 1e-9 times the frequency scale."""
    floor = GAMMA_FLOOR_RTOL * model.frequency_scale
    if model.osc.gamma_p >= floor:
        return model
    logger.debug("gamma_p floored at %.3g for a strictly stable plant", floor)
    osc = model.osc.model_copy(update={"gamma_p": floor})
    return model.model_copy(update={"osc": osc})


def output_spectrum(model: SystemModel) -> SpectralDensity:
    """S_yy = S_ZZ + 2 Re(R_xx) S_ZF + S_FF |R_xx|^2 over the denominator |P|^2."""
    n = model.noise
    p = _p_polynomial(model.osc)
    pc = p.conj()
    num = n.s_zz * (p * pc) - n.s_zf * (p + pc) + n.s_ff
    return SpectralDensity(RationalFunction(num, p * pc))


def cross_spectrum_xy(model: SystemModel) -> RationalFunction:
    """S_xy = S_FF |R_xx|^2 + S_ZF R_xx for x0 = R_xx F and y0 = x0 + Z."""
    n = model.noise
    p = _p_polynomial(model.osc)
    pc = p.conj()
    return RationalFunction(n.s_ff - n.s_zf * pc, p * pc)


def position_spectrum(model: SystemModel) -> SpectralDensity:
    """Open-loop S_xx = S_FF |R_xx|^2."""
    p = _p_polynomial(model.osc)
    return SpectralDensity(RationalFunction(model.noise.s_ff, p * p.conj()))


def force_referred_spectrum(model: SystemModel) -> SpectralDensity:
    """S_G = S_yy / |R_xx|^2, equal to S_ZZ L L* for an undamped plant."""
    return SpectralDensity(RationalFunction(output_spectrum(model).rat.num))


def sql_force(omega):
    """Free-mass force SQL 2 hbar Omega^2."""
    return 2.0 * HBAR * np.asarray(omega, dtype=float) ** 2


def sql_beating_factor(model: SystemModel) -> Tuple[float, float]:
    """Numerical minimum of S_G / S_G^SQL over real Omega > 0.

    Returns:
        (eta^2, Omega at the minimum).
    """
    s_g = force_referred_spectrum(model)
    _, b = homogeneous_params(model)
    center = 0.5 * math.log(b)

    def ratio(log_w: float) -> float:
        w = math.exp(log_w)
        return float(np.real(s_g(w))) / float(sql_force(w))

    res = optimize.minimize_scalar(ratio, bounds=(center - 8.0, center + 8.0),
                                   method="bounded", options={"xatol": 1e-12})
    return float(res.fun), math.exp(res.x)
