"""Oscillator plus controller as one linear SDE, and its stationary covariance.

State z = (x, p, xi) with xi the controller state. The controller sees
y = x + Z and applies the force -u with u = C_c xi + D_c y, so

    dz = M z dt + G dw,    E[dw dw^T] = W dt,    w = (F, Z),

where W holds the two-sided intensities S/2 of the single-sided spectra.
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import linalg

from ..exceptions import RealizationError, UnstableLoopError
from ..ratfun import RationalFunction, as_rational
from ..schemas import GaussianState, SystemModel
from .realization import StateSpaceRealization, realize

logger = logging.getLogger(__name__)

STABILITY_RTOL = 1e-10


@dataclass(frozen=True)
class LinearSystem:
    """Drift M, noise input G and intensity W of a closed loop."""
    drift: np.ndarray
    noise_input: np.ndarray
    intensity: np.ndarray
    controller: StateSpaceRealization

    @property
    def dimension(self) -> int:
        return self.drift.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.drift)

    def poles(self) -> np.ndarray:
        """Closed-loop poles in the Omega plane (Omega = i lambda)."""
        return 1j * self.eigenvalues()

    def is_stable(self) -> bool:
        lam = self.eigenvalues()
        scale = max(float(np.abs(lam).max()), 1e-300)
        return bool(np.all(lam.real < -STABILITY_RTOL * scale))

    def require_stable(self) -> "LinearSystem":
        if not self.is_stable():
            raise UnstableLoopError("closed loop is not strictly stable", self.poles())
        return self

    @property
    def diffusion(self) -> np.ndarray:
        return self.noise_input @ self.intensity @ self.noise_input.T


def first_order_controller(c0: float, kappa1: float, kappa2: float) -> StateSpaceRealization:
    """Realization of C = c0 (Omega - i kappa1) / (Omega - i kappa2).

    In s = -i Omega this is c0 (s - kappa1) / (s - kappa2), i.e.
    D = c0, A = kappa2, B = 1, C = c0 (kappa2 - kappa1).
    """
    return StateSpaceRealization(
        np.array([[float(kappa2)]]), np.array([[1.0]]),
        np.array([[float(c0) * (kappa2 - kappa1)]]), float(c0),
    )


def closed_loop_system(model: SystemModel,
                       c_kernel: Union[RationalFunction, StateSpaceRealization, float]) -> LinearSystem:
    """Augmented plant + controller of a feedback loop u = -C y.

    Args:
        model: Plant and Markovian noise.
        c_kernel: Feedback kernel C(Omega), its realization, or a constant
            gain (0 for the open loop).

    Raises:
        RealizationError: C is improper or has no real realization.
    """
    ctrl = c_kernel if isinstance(c_kernel, StateSpaceRealization) else realize(as_rational(c_kernel))
    if not ctrl.is_real:
        raise RealizationError("feedback kernel must be real in the time domain")
    ctrl = ctrl.as_real()
    n = ctrl.order
    osc, noise = model.osc, model.noise
    w2 = osc.omega_p ** 2 + osc.gamma_p ** 2
    d = float(ctrl.feedthrough)

    drift = np.zeros((2 + n, 2 + n))
    drift[0, 1] = 1.0
    drift[1, 0] = -w2 - d
    drift[1, 1] = -2.0 * osc.gamma_p
    drift[1, 2:] = -ctrl.c_row[0]
    drift[2:, 0] = ctrl.b_matrix[:, 0]
    drift[2:, 2:] = ctrl.a_matrix

    noise_input = np.zeros((2 + n, 2))
    noise_input[1, 0] = 1.0
    noise_input[1, 1] = -d
    noise_input[2:, 1] = ctrl.b_matrix[:, 0]
    intensity = 0.5 * np.array([[noise.s_ff, noise.s_zf], [noise.s_zf, noise.s_zz]])
    return LinearSystem(drift, noise_input, intensity, ctrl)


def open_loop_system(model: SystemModel) -> LinearSystem:
    return closed_loop_system(model, 0.0)


def lyapunov_covariance(system: LinearSystem) -> np.ndarray:
    """Stationary covariance Sigma with M Sigma + Sigma M^T + G W G^T = 0.

    Raises:
        UnstableLoopError: M is not strictly stable (marginal included).
    """
    system.require_stable()
    cov = linalg.solve_continuous_lyapunov(system.drift, -system.diffusion)
    return 0.5 * (cov + cov.T)


def lyapunov_variance(system: LinearSystem) -> GaussianState:
    """(V_xx, V_pp, V_xp) of the oscillator in the stationary loop."""
    cov = lyapunov_covariance(system)
    logger.debug("Lyapunov covariance diag %s", np.diag(cov))
    return GaussianState.from_matrix(cov[:2, :2])
