"""Optimal feedback controller, controlled state and figures of merit.

Feedback force is u = -C y; with H = 1 the loop maps the open-loop record
into x = x0 - K_ctrl y0 with K_ctrl = R_xx C / (1 + R_xx C).
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np
from scipy import special

from .conditioning import (
    WienerFilterPair,
    conditional_covariance_general,
    conditional_state,
    kalman_filters,
    whitened_gains,
)
from .exceptions import (
    AlgebraConsistencyError,
    DegenerateControllerError,
    DivergentIntegralError,
    ImproperControllerError,
    InternalConsistencyError,
    InvalidParameterError,
    SynthesisConsistencyError,
)
from .plant import ab_params, output_spectrum, purity_mu, regularized, response
from .ratfun import (
    OMEGA,
    Polynomial,
    RationalFunction,
    SpectralDensity,
    initial_value,
    integrate_spectrum,
    partial_fractions,
)
from .schemas import ControlMetrics, GaussianState, SqueezeClass, SystemModel
from .units import HBAR

logger = logging.getLogger(__name__)

DEGENERATE_RTOL = 1e-12
IDENTITY_RTOL = 1e-10
# purity shift of the gamma-floored plant is O(GAMMA_FLOOR_RTOL)
REGULARIZED_PURITY_RTOL = 1e-7
ASYMPTOTE_RTOL = 1e-8


class MarkovianController(NamedTuple):
    """Closed-form optimal controller C = c0 (Omega - c1) / (Omega - c2)."""
    c0: complex
    c1: complex
    c2: complex
    omega1: complex
    omega2: complex
    omega3: complex
    omega4: complex

    @property
    def poles(self) -> Tuple[complex, complex, complex]:
        return self.omega1, self.omega2, self.omega3


@dataclass(frozen=True)
class ControllerSynthesis:
    """Optimal loop of one model."""
    k_ctrl: RationalFunction
    c_kernel: RationalFunction
    r_eff: RationalFunction
    poles: Tuple[complex, complex, complex]
    zero: complex
    conditional: GaussianState
    controlled: GaussianState
    u_ctrl: float
    rho: float
    coefficients: MarkovianController


@dataclass(frozen=True)
class Analysis:
    """Everything ``analyze`` reports for one model."""
    model: SystemModel
    mu: float
    a: float
    b: float
    synthesis: ControllerSynthesis
    metrics: ControlMetrics


def markovian_controller(a: float, b: float, omega_p: float,
                         omega_s: Optional[float] = None) -> MarkovianController:
    """Coefficients, closed-loop poles and zero of the optimal Markovian loop.

    Args:
        a: A parameter.
        b: B parameter.
        omega_p: Physical oscillator frequency (0 for a free mass).
        omega_s: Frequency scale (A, B) were formed with; defaults to omega_p.

    Raises:
        InvalidParameterError: A > B or no positive frequency scale.
        DegenerateControllerError: A = B, where Q_eff is infinite.
    """
    scale = omega_p if omega_s is None else omega_s
    if scale <= 0:
        raise InvalidParameterError("a positive frequency scale is required")
    if a > b * (1 + DEGENERATE_RTOL):
        raise InvalidParameterError(f"A={a:.9g} exceeds B={b:.9g}")
    if b - a <= DEGENERATE_RTOL * b:
        raise DegenerateControllerError(
            "A = B: the optimal closed loop has infinite Q_eff; add loss or "
            "classical noise, or detune S_ZF slightly"
        )
    s2 = scale * scale
    ha, hb = a * s2, b * s2
    w2 = omega_p * omega_p
    re = math.sqrt((hb + ha) / 2.0)
    im = math.sqrt((hb - ha) / 2.0)
    o1, o2 = complex(re, -im), complex(-re, -im)
    o3 = -1j * math.sqrt(hb)
    o4 = -1j * (math.sqrt(hb) + math.sqrt(2.0 * (hb - ha)))
    c0 = -(w2 + o4 * o3)
    c1 = (o3 ** 3 + w2 * o4) / (w2 + o4 * o3)
    return MarkovianController(c0, c1, o4, o1, o2, o3, o4)


def markovian_kernel(ctrl: MarkovianController) -> RationalFunction:
    return RationalFunction.from_zpk([ctrl.c1], [ctrl.c2], ctrl.c0)


def markovian_k_ctrl(ctrl: MarkovianController) -> RationalFunction:
    """K_ctrl = -c0 (Omega - c1) / [(Omega - O1)(Omega - O2)(Omega - O3)]."""
    return RationalFunction.from_zpk([ctrl.c1], list(ctrl.poles), -ctrl.c0)


def markovian_r_eff(ctrl: MarkovianController) -> RationalFunction:
    return RationalFunction.from_zpk([ctrl.omega4], list(ctrl.poles), -1.0)


def synthesize_optimal(g_x: RationalFunction, rho: float,
                       phi_plus: RationalFunction) -> RationalFunction:
    """K_ctrl = (1/phi_+) [G_x(Omega) - G_x(0) / (rho - i Omega)].

    G_x(0) is the kernel at t = 0+, so the correction removes the jump of the
    position gain and Omega K_ctrl vanishes at infinity.

    Raises:
        SynthesisConsistencyError: the result is not causal or Omega K_ctrl
            does not vanish at infinity.
    """
    if rho <= 0:
        raise InvalidParameterError(f"rho = {rho} must be positive")
    g0 = initial_value(g_x)
    size = sum(abs(t.coeffs[0]) for t in partial_fractions(g_x).terms)
    correction = RationalFunction(g0, Polynomial.from_roots([-1j * rho], -1j))
    k = (_drop_asymptote(g_x - correction, rho, size) / phi_plus).reduced()
    if not k.is_causal():
        raise SynthesisConsistencyError(f"K_ctrl has non-causal poles {k.poles()}")
    if k.relative_degree < 2:
        raise SynthesisConsistencyError(
            f"Omega K_ctrl does not vanish (relative degree {k.relative_degree})"
        )
    return k


def _drop_asymptote(r: RationalFunction, omega: float, size: float) -> RationalFunction:
    """Zero the leading numerator terms that keep Omega r finite at infinity.

    A term is dropped only while its size at ``omega`` is round-off against
    ``size``; a genuine residue is left for the caller's degree check.
    """
    num = r.num.coeffs
    lead, den_degree = r.den.lead, r.den.degree
    keep = len(num)
    while keep > 1 and keep >= den_degree:
        if abs(num[keep - 1] / lead) * omega ** (keep - den_degree) > ASYMPTOTE_RTOL * size:
            break
        keep -= 1
    return RationalFunction(Polynomial(num[:keep]), r.den)


def feedback_kernel(k_ctrl: RationalFunction, r_xx: RationalFunction,
                    h: float = 1.0) -> RationalFunction:
    """C = K_ctrl / (R_xx (1 - H K_ctrl)), reduced.

    Raises:
        AlgebraConsistencyError: 1 - H K_ctrl vanishes, or the reduced kernel
            fails to reproduce K_ctrl.
    """
    if k_ctrl.is_zero:
        return RationalFunction(0.0)
    loop = (1.0 - k_ctrl * h).reduced()
    if loop.is_zero:
        raise AlgebraConsistencyError("1 - H K_ctrl is identically zero")
    kernel = (k_ctrl / (r_xx * loop)).reduced()
    if not kernel.is_proper():
        raise AlgebraConsistencyError(
            f"feedback kernel kept spurious structure: poles {kernel.poles()}, "
            f"zeros {kernel.zeros()}"
        )
    grid = np.linspace(0.1, 10.0, 50) * _grid_scale(k_ctrl)
    back = ctrl_from_kernel(kernel, r_xx, h)
    ref = np.abs(k_ctrl(grid))
    err = np.max(np.abs(back(grid) - k_ctrl(grid)) / np.maximum(ref, 1e-300))
    if err > 1e-6:
        raise AlgebraConsistencyError(f"kernel round trip misses K_ctrl by {err:.3e}")
    return kernel


def _grid_scale(r: RationalFunction) -> float:
    poles = r.poles()
    return float(np.max(np.abs(poles))) if len(poles) else 1.0


def ctrl_from_kernel(c_kernel: RationalFunction, r_xx: RationalFunction,
                     h: float = 1.0) -> RationalFunction:
    """K_ctrl = R_xx C / (1 + R_xx C H)."""
    rc = r_xx * c_kernel
    return (rc / (1.0 + rc * h)).reduced()


def closed_loop_response(c_kernel: RationalFunction, r_xx: RationalFunction,
                         h: float = 1.0) -> RationalFunction:
    """R_xx^eff = R_xx / (1 + R_xx C H)."""
    return (r_xx / (1.0 + r_xx * c_kernel * h)).reduced()


def controlled_covariance(cond: GaussianState) -> Tuple[GaussianState, float]:
    """Optimally controlled covariance from the conditional one.

    U_ctrl = sqrt(V_xx V_pp) + V_xp; the controlled error ellipse is a circle in
    the trap of frequency rho = sqrt(V_pp/V_xx).
    """
    u = math.sqrt(cond.v_xx * cond.v_pp) + cond.v_xp
    rho = math.sqrt(cond.v_pp / cond.v_xx)
    return GaussianState(v_xx=u / rho, v_pp=u * rho, v_xp=0.0), u


def u_ctrl_closed_form(a: float, b: float, mu: float) -> float:
    """U_ctrl = (hbar mu / 2) (sqrt(1 - A/B) + sqrt(2)) / sqrt(1 + A/B)."""
    r = a / b
    return HBAR * mu / 2.0 * (math.sqrt(max(1.0 - r, 0.0)) + math.sqrt(2.0)) / math.sqrt(1.0 + r)


def _integrate_error(integrand: RationalFunction) -> float:
    try:
        return integrate_spectrum(integrand)
    except DivergentIntegralError as exc:
        raise ImproperControllerError(
            f"controlled variance diverges: integrand decays like Omega^{exc.power}"
        ) from exc


def controlled_covariance_integral(k_ctrl: RationalFunction, filters: WienerFilterPair,
                                   s_yy: SpectralDensity,
                                   cond: GaussianState) -> GaussianState:
    """V_ctrl = V_c + int |(-i Omega)^[a=p] K_ctrl - K_a|^2 S_yy dOmega/2pi.

    Raises:
        ImproperControllerError: an integrand is not integrable.
    """
    s = s_yy.rat
    dk_x = (k_ctrl - filters.k_x).reduced()
    dk_p = (k_ctrl * (OMEGA * -1j) - filters.k_p).reduced()
    v_xx = cond.v_xx + _integrate_error(dk_x * dk_x.conj() * s)
    v_pp = cond.v_pp + _integrate_error(dk_p * dk_p.conj() * s)
    v_xp = cond.v_xp + _integrate_error((dk_x * dk_p.conj() + dk_x.conj() * dk_p) * s * 0.5)
    return GaussianState(v_xx=v_xx, v_pp=v_pp, v_xp=v_xp)


def occupation(state: GaussianState) -> Tuple[float, float]:
    """(N_eff, omega_star) with omega_star = sqrt(V_pp / V_xx)."""
    return state.n_eff, math.sqrt(state.v_pp / state.v_xx)


def entropy(n_eff):
    """Von Neumann entropy (N+1) ln(N+1) - N ln N in nats."""
    n = np.maximum(np.asarray(n_eff, dtype=float), 0.0)
    value = special.xlogy(n + 1.0, n + 1.0) - special.xlogy(n, n)
    return float(value) if np.ndim(value) == 0 else value


def squeeze_classification(omega_star: float, omega_p: float,
                           rtol: float = 1e-9) -> SqueezeClass:
    if abs(omega_star - omega_p) <= rtol * max(omega_star, omega_p):
        return SqueezeClass.NONE
    return SqueezeClass.POSITION if omega_star > omega_p else SqueezeClass.MOMENTUM


def semiclassical_estimate(q_eff: float, s_x: float, omega: float) -> float:
    """N ~ Q_eff S_x / S_SQL with S_SQL = 2 hbar / Omega^2 (unit mass)."""
    if omega <= 0:
        raise InvalidParameterError("semiclassical estimate needs Omega > 0")
    return q_eff * s_x / (2.0 * HBAR / omega ** 2)


def position_referred_noise(model: SystemModel, omega: float) -> Optional[float]:
    """Detector noise referred to position, S_yy = S_ZZ + 2 Re(R_xx) S_ZF + |R_xx|^2 S_FF.

    None on the resonance of an undamped plant, where |R_xx| diverges.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        value = complex(output_spectrum(model)(omega))
    return value.real if math.isfinite(value.real) and math.isfinite(value.imag) else None


def q_eff(a: float, b: float) -> float:
    return math.sqrt(b + a) / (2.0 * math.sqrt(b - a))


def metrics(model: SystemModel, synthesis: ControllerSynthesis) -> ControlMetrics:
    """Figures of merit of a synthesized loop.

    Raises:
        InternalConsistencyError: U_ctrl / (hbar/2) differs from
            eta^2 + sqrt(2) mu / sqrt(1 + A/B), or N_eff < eta^2 / 2.
    """
    a, b = ab_params(model)
    mu = purity_mu(model.noise)
    qe = q_eff(a, b)
    eta2 = mu / (2.0 * qe)
    u = synthesis.u_ctrl
    identity = eta2 + math.sqrt(2.0) * mu / math.sqrt(1.0 + a / b)
    if abs(u / (HBAR / 2) - identity) > IDENTITY_RTOL * max(1.0, identity):
        raise InternalConsistencyError(
            f"U_ctrl/(hbar/2) = {u / (HBAR / 2):.12g} but eta^2 + sqrt2 mu/sqrt(1+A/B) "
            f"= {identity:.12g}"
        )
    n_eff, omega_star = occupation(synthesis.controlled)
    if n_eff < eta2 / 2 - IDENTITY_RTOL:
        raise InternalConsistencyError(f"N_eff = {n_eff:.12g} below eta^2/2 = {eta2 / 2:.12g}")
    omega_1 = abs(synthesis.poles[0])
    s_x = position_referred_noise(model, omega_1)
    return ControlMetrics(
        u_ctrl=u,
        n_eff=n_eff,
        q_eff=qe,
        eta2=eta2,
        omega_star=omega_star,
        entropy=entropy(n_eff),
        squeeze_class=squeeze_classification(omega_star, model.osc.omega_p),
        semiclassical=None if s_x is None else semiclassical_estimate(qe, s_x, omega_1),
    )


def closed_form_synthesis(model: SystemModel) -> ControllerSynthesis:
    """Optimal loop from the Markovian closed forms (gamma_p -> 0 limit)."""
    a, b = ab_params(model)
    cond = conditional_state(model)
    ctrl = markovian_controller(a, b, model.osc.omega_p, model.frequency_scale)
    controlled, u = controlled_covariance(cond)
    controlled.require_physical()
    return ControllerSynthesis(
        k_ctrl=markovian_k_ctrl(ctrl),
        c_kernel=markovian_kernel(ctrl),
        r_eff=markovian_r_eff(ctrl),
        poles=ctrl.poles,
        zero=ctrl.omega4,
        conditional=cond,
        controlled=controlled,
        u_ctrl=u,
        rho=math.sqrt(cond.v_pp / cond.v_xx),
        coefficients=ctrl,
    )


def _kernel_coefficients(kernel: RationalFunction) -> Tuple[complex, complex, complex]:
    zeros, poles = kernel.zeros(), kernel.poles()
    if len(zeros) != 1 or len(poles) != 1:
        raise AlgebraConsistencyError(
            f"expected a first-order kernel, got zeros {zeros} and poles {poles}"
        )
    return kernel.num.lead / kernel.den.lead, complex(zeros[0]), complex(poles[0])


def spectral_synthesis(model: SystemModel) -> ControllerSynthesis:
    """Optimal loop built from the spectra by Wiener-Hopf factorization.

    Uses a plant regularized at gamma_floor; requires omega_p > 0.
    """
    reg = regularized(model)
    phi, g_x, _ = whitened_gains(model)
    cond = conditional_covariance_general(reg).require_physical(rtol=REGULARIZED_PURITY_RTOL)
    rho = math.sqrt(cond.v_pp / cond.v_xx)
    k = synthesize_optimal(g_x, rho, phi)
    r_xx = response(reg.osc)
    kernel = feedback_kernel(k, r_xx)
    r_eff = closed_loop_response(kernel, r_xx)
    # order as (Omega_1, Omega_2, Omega_3): the imaginary-axis pole last
    poles = sorted(r_eff.poles(), key=lambda p: (abs(p.real) <= 1e-6 * abs(p), -p.real))
    if len(poles) != 3 or len(r_eff.zeros()) != 1:
        raise AlgebraConsistencyError(f"closed loop has poles {poles}, zeros {r_eff.zeros()}")
    c0, c1, c2 = _kernel_coefficients(kernel)
    o4 = complex(r_eff.zeros()[0])
    controlled, u = controlled_covariance(cond)
    ctrl = MarkovianController(c0, c1, c2, poles[0], poles[1], poles[2], o4)
    logger.debug("spectral synthesis poles %s zero %s", poles, o4)
    return ControllerSynthesis(
        k_ctrl=k, c_kernel=kernel, r_eff=r_eff, poles=tuple(poles), zero=o4,
        conditional=cond, controlled=controlled, u_ctrl=u, rho=rho, coefficients=ctrl,
    )


def integral_route(model: SystemModel, k_ctrl: Optional[RationalFunction] = None) -> GaussianState:
    """Controlled covariance by integrating the excess error of ``k_ctrl``.

    Defaults to the optimal controller from ``spectral_synthesis``; the
    estimator is the Riccati one.
    """
    reg = regularized(model)
    if k_ctrl is None:
        k_ctrl = spectral_synthesis(model).k_ctrl
    cond = conditional_covariance_general(reg)
    return controlled_covariance_integral(k_ctrl, kalman_filters(reg), output_spectrum(reg), cond)


def analyze(model: SystemModel) -> Analysis:
    """Closed-form pipeline: purity, (A, B), conditional and controlled states, metrics."""
    mu = purity_mu(model.noise)
    a, b = ab_params(model)
    synthesis = closed_form_synthesis(model)
    return Analysis(model=model, mu=mu, a=a, b=b, synthesis=synthesis,
                    metrics=metrics(model, synthesis))


def closed_form_metrics(s_zz, s_ff, s_zf, omega_p=0.0) -> Dict[str, np.ndarray]:
    """Vectorized mu, A/B, U_ctrl, N_eff, Q_eff and eta^2 for arrays of noise triples.

    Entries violating the Heisenberg bound come back as NaN.
    """
    s_zz, s_ff, s_zf, omega_p = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (s_zz, s_ff, s_zf, omega_p))
    )
    w2 = omega_p ** 2
    a = w2 + s_zf / s_zz
    b2 = w2 * w2 + 2.0 * w2 * s_zf / s_zz + s_ff / s_zz
    det = s_zz * s_ff - s_zf ** 2
    valid = (det >= HBAR ** 2 * (1 - 1e-12)) & (b2 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.sqrt(b2)
        mu = np.sqrt(det) / HBAR
        r = a / b
        u = HBAR * mu / 2.0 * (np.sqrt(np.clip(1.0 - r, 0.0, None)) + math.sqrt(2.0)) / np.sqrt(1.0 + r)
        qe = np.sqrt(b + a) / (2.0 * np.sqrt(b - a))
        eta2 = mu / (2.0 * qe)
    out = {"mu": mu, "a_over_b": r, "u_ctrl": u, "n_eff": u / HBAR - 0.5,
           "q_eff": qe, "eta2": eta2}
    return {k: np.where(valid, v, np.nan) for k, v in out.items()}
