"""Brute-force search over first-order feedback controllers.

The family is C = c0 (Omega - c1) / (Omega - c2) with real c0 and purely
imaginary c1 = i kappa1, c2 = i kappa2, the form the optimal controller takes.
Every candidate is scored by the exact closed-loop Lyapunov covariance;
unstable candidates are skipped.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import optimize

from ..control import closed_form_synthesis, ctrl_from_kernel, integral_route
from ..exceptions import EmptyFamilyError, NumericalError, UnstableLoopError
from ..plant import regularized, response
from ..ratfun import RationalFunction
from ..schemas import SystemModel
from .lyapunov import closed_loop_system, first_order_controller, lyapunov_variance

logger = logging.getLogger(__name__)

C0_SPAN = (0.5, 2.0)
KAPPA_SPAN = 0.5


class ControllerFamily(str, Enum):
    """Which coefficients the search may vary"""
    GENERAL = "general"
    PURE_DAMPING = "pure_damping"


@dataclass(frozen=True)
class SearchResult:
    u_best: float
    coefficients: Tuple[complex, complex, complex]
    family: ControllerFamily
    n_candidates: int
    n_stable: int
    refined: bool
    u_integral: Optional[float] = None


def controller_purity(model: SystemModel, c0: float, kappa1: float, kappa2: float) -> float:
    """U of the stationary loop, or inf when the loop is unstable."""
    system = closed_loop_system(model, first_order_controller(c0, kappa1, kappa2))
    try:
        return lyapunov_variance(system).purity
    except UnstableLoopError:
        return math.inf


def _axis(center: float, span: float, n: int, reference: float) -> np.ndarray:
    if center == 0:
        half = span * abs(reference)
        return np.linspace(-half, half, n)
    return center * np.linspace(1.0 - span, 1.0 + span, n)


def _rescore(model: SystemModel, c0: float, kappa1: float, kappa2: float) -> Optional[float]:
    """U through the frequency-integral route (oscillators only)."""
    if model.osc.omega_p <= 0:
        return None
    kernel = RationalFunction.from_zpk([1j * kappa1], [1j * kappa2], c0)
    try:
        k = ctrl_from_kernel(kernel, response(regularized(model).osc))
        return integral_route(model, k).purity
    except NumericalError as exc:
        logger.warning("integral rescoring failed: %s", exc)
        return None


def brute_force_controller_search(model: SystemModel,
                                  family: ControllerFamily = ControllerFamily.GENERAL,
                                  grid_points: int = 21,
                                  center: Optional[Tuple[complex, complex, complex]] = None,
                                  refine: bool = True,
                                  rescore: bool = True) -> SearchResult:
    """Minimize the controlled purity U over a grid of stable controllers.

    The grid spans c0 x [0.5, 2] and kappa1, kappa2 by +-50% around
    ``center`` (the closed-form optimum by default). ``PURE_DAMPING`` pins
    kappa1 = 0. The best grid node is polished with Nelder-Mead when
    ``refine`` is set, and re-scored by the frequency-integral route when
    ``rescore`` is set and omega_p > 0.

    Raises:
        EmptyFamilyError: no candidate gives a stable loop.
    """
    if center is None:
        center = closed_form_synthesis(model).coefficients[:3]
    c0_mid = float(np.real(center[0]))
    k1_mid = 0.0 if family is ControllerFamily.PURE_DAMPING else float(np.imag(center[1]))
    k2_mid = float(np.imag(center[2]))

    c0_axis = c0_mid * np.geomspace(*C0_SPAN, grid_points)
    k2_axis = _axis(k2_mid, KAPPA_SPAN, grid_points, 1.0)
    if family is ControllerFamily.PURE_DAMPING:
        k1_axis = np.zeros(1)
    else:
        k1_axis = _axis(k1_mid, KAPPA_SPAN, grid_points, k2_mid)

    best, best_u, n_stable, n_total = None, math.inf, 0, 0
    for c0, k1, k2 in itertools.product(c0_axis, k1_axis, k2_axis):
        n_total += 1
        u = controller_purity(model, c0, k1, k2)
        if not math.isfinite(u):
            continue
        n_stable += 1
        if u < best_u:
            best, best_u = (c0, k1, k2), u
    if best is None:
        raise EmptyFamilyError(f"none of {n_total} candidate controllers is stable")
    logger.info("grid search: %d/%d stable, best U=%.9g", n_stable, n_total, best_u)

    refined = False
    if refine:
        if family is ControllerFamily.PURE_DAMPING:
            def objective(v):
                return controller_purity(model, v[0], 0.0, v[1])
            start = [best[0], best[2]]
        else:
            def objective(v):
                return controller_purity(model, v[0], v[1], v[2])
            start = list(best)
        res = optimize.minimize(objective, start, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        if math.isfinite(res.fun) and res.fun < best_u:
            v = res.x
            best = (v[0], 0.0, v[1]) if family is ControllerFamily.PURE_DAMPING else tuple(v)
            best_u, refined = float(res.fun), True
        if not res.success:
            logger.warning("controller refinement stopped early: %s", res.message)

    c0, k1, k2 = (float(v) for v in best)
    u_integral = _rescore(model, c0, k1, k2) if rescore else None
    return SearchResult(
        u_best=best_u,
        coefficients=(complex(c0), 1j * k1, 1j * k2),
        family=family,
        n_candidates=n_total,
        n_stable=n_stable,
        refined=refined,
        u_integral=u_integral,
    )
