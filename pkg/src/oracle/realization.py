"""State-space realization of rational transfer functions of Omega.

With s = -i Omega the time-domain system is dx/dt = A x + B u, y = C x + D u,
and its frequency response is C (sI - A)^-1 B + D.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..exceptions import RealizationError
from ..ratfun import RationalFunction

logger = logging.getLogger(__name__)

GRID_POINTS = 200
MATCH_RTOL = 1e-8
REAL_RTOL = 1e-10


@dataclass(frozen=True)
class StateSpaceRealization:
    """Single-input single-output (A, B, C, D)."""
    a_matrix: np.ndarray
    b_matrix: np.ndarray
    c_row: np.ndarray
    feedthrough: complex

    @property
    def order(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def is_real(self) -> bool:
        parts = [self.a_matrix, self.b_matrix, self.c_row, np.atleast_1d(self.feedthrough)]
        size = max(max((np.abs(p).max() for p in parts if p.size), default=0.0), 1e-300)
        return all(not p.size or np.abs(np.imag(p)).max() <= REAL_RTOL * size for p in parts)

    def as_real(self) -> "StateSpaceRealization":
        """Drop rounding-level imaginary parts.

        Raises:
            RealizationError: the realization has genuinely complex entries.
        """
        if not self.is_real:
            raise RealizationError("transfer function has no real realization")
        return StateSpaceRealization(
            np.real(self.a_matrix), np.real(self.b_matrix), np.real(self.c_row),
            float(np.real(self.feedthrough)),
        )

    def poles(self) -> np.ndarray:
        """Eigenvalues of A mapped to the Omega plane (Omega = i s)."""
        if self.order == 0:
            return np.zeros(0, dtype=complex)
        return 1j * np.linalg.eigvals(self.a_matrix)

    def transfer(self, omega) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=complex))
        out = np.full(omega.shape, complex(self.feedthrough))
        if self.order == 0:
            return out
        eye = np.eye(self.order)
        for k, w in enumerate(omega.flat):
            x = np.linalg.solve(-1j * w * eye - self.a_matrix, self.b_matrix[:, 0])
            out.flat[k] += (self.c_row[0] @ x)
        return out


def _to_s(coeffs: np.ndarray) -> np.ndarray:
    """Ascending Omega coefficients -> ascending s coefficients (Omega = i s)."""
    return coeffs * (1j ** np.arange(len(coeffs)))


def _check_grid(r: RationalFunction, ss: StateSpaceRealization) -> None:
    features = np.abs(np.concatenate([r.poles(), r.zeros()]))
    features = features[features > 0]
    center = float(np.exp(np.mean(np.log(features)))) if len(features) else 1.0
    grid = center * np.logspace(-3, 3, GRID_POINTS // 2)
    grid = np.concatenate([-grid[::-1], grid])
    expected = r(grid)
    got = ss.transfer(grid)
    err = np.abs(got - expected) / np.maximum(np.abs(expected), 1e-300)
    if err.max() > MATCH_RTOL:
        raise RealizationError(
            f"realization misses the transfer function by {err.max():.3e} relative"
        )


def realize(r: RationalFunction, check: bool = True) -> StateSpaceRealization:
    """Controllable canonical realization of a proper rational function.

    Args:
        r: Transfer function of Omega; common roots are cancelled first so the
            realization is minimal.
        check: Compare the realization with ``r`` on a 200-point grid.

    Returns:
        StateSpaceRealization of order deg(den); the strictly proper remainder
        sits in ``c_row`` and the direct term in ``feedthrough``.

    Raises:
        RealizationError: ``r`` is improper or the grid comparison fails.
    """
    r = r.reduced()
    if not r.is_proper():
        raise RealizationError(
            f"cannot realize an improper transfer function (relative degree {r.relative_degree})"
        )
    if r.is_zero:
        return StateSpaceRealization(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), 0.0)
    den = _to_s(r.den.coeffs)
    num = _to_s(r.num.coeffs)
    n = len(den) - 1
    num = np.pad(num, (0, n + 1 - len(num))) / den[-1]
    den = den / den[-1]
    d = complex(num[n])
    if n == 0:
        return StateSpaceRealization(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), d)
    a = np.zeros((n, n), dtype=complex)
    a[:-1, 1:] = np.eye(n - 1)
    a[-1, :] = -den[:n]
    b = np.zeros((n, 1), dtype=complex)
    b[-1, 0] = 1.0
    c = (num[:n] - d * den[:n]).reshape(1, n)
    ss = StateSpaceRealization(a, b, c, d)
    if ss.is_real:
        ss = ss.as_real()
    logger.debug("realized order-%d system, feedthrough %s", n, d)
    if check:
        _check_grid(r, ss)
    return ss
