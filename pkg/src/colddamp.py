"""Cold damping of a viscously damped oscillator under phase readout.

With epsilon = zeta_x = phi = 0 and the thermal force spectrum written as
zeta_F^2 = 4 gamma_p k_B T / (Omega_q^2 hbar), the only parameters left are the
reduced temperature theta = T / T_c and the strength x = Omega_q^2 / omega_p^2:

    mu^2 = 1 + sqrt(2) theta / x,   A = 1,   B^2 = 1 + x^2 + sqrt(2) theta x.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from .control import analyze, closed_form_metrics
from .exceptions import InvalidParameterError, OutOfRegimeError
from .schemas import MarkovianNoise, Oscillator, SystemModel, ThermalEnvironment
from .units import critical_temperature_si

logger = logging.getLogger(__name__)

FIG2_LEFT_THETAS = (0.1, 0.5, 1.0, 2.0, 10.0)
LOG10_X_BOUNDS = (-4.0, 6.0)


class StrengthOptimum(NamedTuple):
    x: float
    n_eff: float
    interior: bool


def critical_temperature(env: ThermalEnvironment) -> Tuple[float, float]:
    """(T_c, theta) with T_c = hbar omega_p Q_p / (2 sqrt(2) k_B)."""
    t_c = critical_temperature_si(env.omega_p, env.quality_factor)
    return t_c, env.temperature / t_c


def n_opt(theta: float) -> float:
    """Minimum occupation below the critical temperature.

    Raises:
        OutOfRegimeError: theta > 1, where the infimum is 1/sqrt(2) at
            infinite strength.
    """
    if theta < 0:
        raise InvalidParameterError(f"theta = {theta} is negative")
    if theta > 1:
        raise OutOfRegimeError(
            f"theta = {theta} > 1: above T_c the infimum is 1/sqrt(2), reached "
            "only at infinite measurement strength"
        )
    root = math.sqrt(2.0 - theta ** 2)
    return 2.0 ** -1.5 * (root + math.sqrt(2.0 * theta * root) + theta - math.sqrt(2.0))


def optimal_strength(theta: float) -> float:
    """Omega_q / omega_p at the minimum of N_eff, for 0 < theta < 1.

    Raises:
        OutOfRegimeError: theta >= 1 (the optimal strength diverges).
    """
    if theta <= 0:
        raise InvalidParameterError(f"theta = {theta} must be positive")
    if theta >= 1:
        raise OutOfRegimeError(f"optimal strength diverges for theta = {theta} >= 1")
    root = math.sqrt(2.0 - theta ** 2)
    inner = math.sqrt(theta) * (2.0 - theta ** 2) ** 0.75 / (root - theta) - theta / math.sqrt(2.0)
    return math.sqrt(inner)


def thermal_noise(theta, x):
    """(S_ZZ, S_FF) in units hbar = m = omega_p = 1; S_ZF = 0."""
    x = np.asarray(x, dtype=float)
    return 1.0 / x, x + math.sqrt(2.0) * np.asarray(theta, dtype=float)


def thermal_model(theta: float, x: float) -> SystemModel:
    """Natural-unit model of the damped oscillator at strength x."""
    if x <= 0:
        raise InvalidParameterError(f"strength x = {x} must be positive")
    s_zz, s_ff = thermal_noise(theta, x)
    return SystemModel(
        osc=Oscillator(omega_p=1.0),
        noise=MarkovianNoise(s_zz=float(s_zz), s_ff=float(s_ff)),
        omega_q=math.sqrt(x),
    )


def occupation_vs_strength(theta: float, x: float) -> float:
    """N_eff at (theta, x) through the full control pipeline."""
    return analyze(thermal_model(theta, x)).metrics.n_eff


def occupation_grid(theta, x) -> np.ndarray:
    """Vectorized N_eff over broadcast (theta, x)."""
    s_zz, s_ff = thermal_noise(theta, x)
    return closed_form_metrics(s_zz, s_ff, 0.0, 1.0)["n_eff"]


def minimize_over_strength(theta: float, grid_points: int = 201) -> StrengthOptimum:
    """Minimize N_eff over log10 x in [-4, 6]: coarse grid, then bounded Brent.

    ``interior`` is False when the minimum sits on the upper bound, which is
    the T >= T_c behaviour.
    """
    lo, hi = LOG10_X_BOUNDS
    grid = np.linspace(lo, hi, grid_points)
    values = occupation_grid(theta, 10.0 ** grid)
    k = int(np.nanargmin(values))
    if k == grid_points - 1:
        logger.info("theta=%.4g: N_eff decreasing up to x=1e%g", theta, hi)
        return StrengthOptimum(10.0 ** hi, float(values[k]), False)
    left, right = grid[max(k - 1, 0)], grid[min(k + 1, grid_points - 1)]
    res = optimize.minimize_scalar(
        lambda t: float(occupation_grid(theta, 10.0 ** t)),
        bounds=(left, right), method="bounded", options={"xatol": 1e-10},
    )
    if not res.success:
        logger.warning("strength minimization did not converge at theta=%.4g", theta)
    return StrengthOptimum(10.0 ** res.x, float(res.fun), True)


def fig2_left_sweep(thetas: Sequence[float] = FIG2_LEFT_THETAS,
                    x_grid: Optional[np.ndarray] = None,
                    workers: int = 1) -> pd.DataFrame:
    """Plot-ready N_eff(theta, x) table, one block per theta in input order."""
    if x_grid is None:
        x_grid = np.logspace(-2, 4, 121)
    x_grid = np.asarray(x_grid, dtype=float)
    if np.any(x_grid <= 0):
        raise InvalidParameterError("measurement strengths must be positive")

    def block(theta: float) -> pd.DataFrame:
        s_zz, s_ff = thermal_noise(theta, x_grid)
        table = closed_form_metrics(s_zz, s_ff, 0.0, 1.0)
        frame = pd.DataFrame({"theta": theta, "x": x_grid})
        for key in ("n_eff", "u_ctrl", "q_eff", "eta2", "mu", "a_over_b"):
            frame[key] = table[key]
        return frame

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        frames = list(pool.map(block, thetas))
    return pd.concat(frames, ignore_index=True)
