"""Interferometric readout of a free test mass.

Input quadratures (a1, a2) have single-sided covariance
R(lambda) diag(e^-2r, e^2r) R(lambda)^T (identity for vacuum). The force and
sensing noises of the readout, in units hbar = m = 1, are

    S_FF = Omega_q^2 S11 + 2 Omega_q^2 zeta_F^2
    S_ZF = S11 tan(phi) + S12
    S_ZZ = 2 zeta_x^2 / Omega_q^2
           + (S11 tan^2 phi + 2 S12 tan phi + S22 + eps / cos^2 phi) / Omega_q^2
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import constants, optimize

from .control import closed_form_metrics
from .exceptions import DerivationError
from .plant import purity_mu
from .schemas import ClassicalBudget, MarkovianNoise, ReadoutConfig
from .units import HBAR, HBAR_SI

logger = logging.getLogger(__name__)

PHI_LIMIT = math.pi / 2 - 1e-4
LOG_OMEGA_Q_RANGE = (-2.0, 2.0)


class ReadoutOptimum(NamedTuple):
    config: ReadoutConfig
    n_eff: float
    converged: bool


def squeezed_covariance(squeeze_db, squeeze_angle):
    """(S11, S12, S22) of the input quadratures; determinant 1."""
    r = np.asarray(squeeze_db, dtype=float) * math.log(10.0) / 20.0
    lam = np.asarray(squeeze_angle, dtype=float)
    c, s = np.cos(lam), np.sin(lam)
    lo, hi = np.exp(-2.0 * r), np.exp(2.0 * r)
    return c * c * lo + s * s * hi, c * s * (lo - hi), s * s * lo + c * c * hi


def readout_noise(omega_q, phi, squeeze_db=0.0, squeeze_angle=0.0, loss=0.0,
                  zeta_x=0.0, zeta_f=0.0):
    """Vectorized (S_ZZ, S_FF, S_ZF) of the readout."""
    s11, s12, s22 = squeezed_covariance(squeeze_db, squeeze_angle)
    wq2 = np.asarray(omega_q, dtype=float) ** 2
    phi = np.asarray(phi, dtype=float)
    t = np.tan(phi)
    zx, zf = np.asarray(zeta_x, dtype=float), np.asarray(zeta_f, dtype=float)
    s_ff = HBAR * wq2 * s11 + 2.0 * HBAR * wq2 * zf ** 2
    s_zf = HBAR * (s11 * t + s12)
    s_zz = (2.0 * HBAR * zx ** 2
            + HBAR * (s11 * t * t + 2.0 * s12 * t + s22 + loss / np.cos(phi) ** 2)) / wq2
    return s_zz, s_ff, s_zf


def to_markovian(cfg: ReadoutConfig) -> MarkovianNoise:
    """Markovian noise triple of a readout configuration.

    Raises:
        DerivationError: the assembled triple violates the Heisenberg bound.
    """
    s_zz, s_ff, s_zf = readout_noise(cfg.omega_q, cfg.phi, cfg.squeeze_db, cfg.squeeze_angle,
                                     cfg.loss, cfg.zeta_x, cfg.zeta_f)
    noise = MarkovianNoise(s_zz=float(s_zz), s_ff=float(s_ff), s_zf=float(s_zf))
    if noise.determinant < HBAR ** 2 * (1 - 1e-9):
        raise DerivationError(
            f"readout gives S_ZZ S_FF - S_ZF^2 = {noise.determinant:.12g} < hbar^2"
        )
    return noise


def readout_mu(cfg: ReadoutConfig) -> float:
    return purity_mu(to_markovian(cfg))


def classical_factor(cfg: ReadoutConfig) -> float:
    """eta_cl^2 = 2 zeta_F zeta_x."""
    return 2.0 * cfg.zeta_f * cfg.zeta_x


def classical_factor_numeric(cfg: ReadoutConfig) -> Tuple[float, float]:
    """min over Omega of (S_xiF + Omega^4 S_xix) / (2 hbar Omega^2), and its argmin."""
    s_xf = 2.0 * HBAR * cfg.omega_q ** 2 * cfg.zeta_f ** 2
    s_xx = 2.0 * HBAR * cfg.zeta_x ** 2 / cfg.omega_q ** 2
    if s_xf == 0 or s_xx == 0:
        return 0.0, math.nan
    center = 0.25 * math.log(s_xf / s_xx)

    def ratio(log_w: float) -> float:
        w2 = math.exp(2.0 * log_w)
        return (s_xf + w2 * w2 * s_xx) / (2.0 * HBAR * w2)

    res = optimize.minimize_scalar(ratio, bounds=(center - 6.0, center + 6.0),
                                   method="bounded", options={"xatol": 1e-12})
    return float(res.fun), math.exp(res.x)


def alpha_from_power(carrier_omega: float, circulating_power: float,
                     transmissivity: float) -> float:
    """Measurement strength alpha = 4 sqrt(hbar omega_0 I_c / (tau c^2)) (SI)."""
    return 4.0 * math.sqrt(HBAR_SI * carrier_omega * circulating_power
                           / (transmissivity * constants.c ** 2))


def omega_q_from_alpha(alpha: float, mass: float) -> float:
    """Omega_q = alpha / sqrt(hbar m) in rad/s."""
    return alpha / math.sqrt(HBAR_SI * mass)


def occupation_grid(omega_q, phi, squeeze_angle, *, squeeze_db: float = 0.0,
                    loss: float = 0.0, zeta_x: float = 0.0, zeta_f: float = 0.0,
                    omega_p: float = 0.0) -> np.ndarray:
    """Vectorized N_eff over broadcast (Omega_q, phi, lambda)."""
    s_zz, s_ff, s_zf = readout_noise(omega_q, phi, squeeze_db, squeeze_angle, loss, zeta_x, zeta_f)
    return closed_form_metrics(s_zz, s_ff, s_zf, omega_p)["n_eff"]


def minimize_occupation(zeta_f: float, zeta_x: float, loss: float, squeeze_db: float = 0.0,
                        fix_phi: Optional[float] = None, grid_points: int = 32) -> ReadoutOptimum:
    """Minimize the free-mass N_eff over (Omega_q, phi, lambda).

    Coarse grid over (log Omega_q, phi in (-pi/2, pi/2), lambda in [0, pi)),
    then Nelder-Mead from the best grid node. ``fix_phi`` pins the homodyne
    angle (e.g. 0 for the phase quadrature).
    """
    log_wq = np.linspace(*LOG_OMEGA_Q_RANGE, grid_points)
    if fix_phi is None:
        phis = np.linspace(-math.pi / 2, math.pi / 2, grid_points + 2)[1:-1]
    else:
        phis = np.array([fix_phi])
    lams = np.linspace(0.0, math.pi, grid_points, endpoint=False)
    gw, gp, gl = np.meshgrid(log_wq, phis, lams, indexing="ij")
    kw = dict(squeeze_db=squeeze_db, loss=loss, zeta_x=zeta_x, zeta_f=zeta_f)
    values = occupation_grid(10.0 ** gw, gp, gl, **kw)
    k = np.unravel_index(int(np.nanargmin(values)), values.shape)
    start = np.array([gw[k], gp[k], gl[k]])

    def objective(v: np.ndarray) -> float:
        phi = fix_phi if fix_phi is not None else float(np.clip(v[1], -PHI_LIMIT, PHI_LIMIT))
        n = float(occupation_grid(10.0 ** v[0], phi, v[2], **kw))
        return n if math.isfinite(n) else 1e300

    res = optimize.minimize(objective, start, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-10, "maxiter": 4000})
    best, value = (res.x, float(res.fun)) if res.fun <= values[k] else (start, float(values[k]))
    if not res.success:
        logger.warning("readout optimization stopped early: %s", res.message)
    phi = fix_phi if fix_phi is not None else float(np.clip(best[1], -PHI_LIMIT, PHI_LIMIT))
    cfg = ReadoutConfig(omega_q=10.0 ** best[0], phi=phi,
                        squeeze_db=squeeze_db, squeeze_angle=float(best[2] % math.pi),
                        loss=loss, zeta_x=zeta_x, zeta_f=zeta_f)
    return ReadoutOptimum(cfg, value, bool(res.success))


def fig2_right_sweep(eta_cl2_grid: Sequence[float], loss: float = 0.01,
                     squeeze_levels: Sequence[float] = (0.0, 10.0), force_share: float = 0.5,
                     grid_points: int = 32, workers: int = 1) -> pd.DataFrame:
    """Minimal N_eff against eta_cl^2 for each input squeezing level."""
    jobs = [(float(e), float(db)) for db in squeeze_levels for e in eta_cl2_grid]

    def point(job: Tuple[float, float]) -> dict:
        eta, db = job
        zeta_f, zeta_x = ClassicalBudget(eta_cl2=eta, force_share=force_share).split()
        best = minimize_occupation(zeta_f, zeta_x, loss, db, grid_points=grid_points)
        return {"eta_cl2": eta, "squeeze_db": db, "n_eff": best.n_eff,
                "omega_q": best.config.omega_q, "phi": best.config.phi,
                "squeeze_angle": best.config.squeeze_angle, "converged": best.converged}

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(point, jobs))
    return pd.DataFrame(rows)
