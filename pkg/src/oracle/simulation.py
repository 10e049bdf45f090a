"""Euler-Maruyama ensemble simulation of the closed feedback loop.

Each trajectory is integrated from rest; after the burn-in its second
moments x^2, p^2 and x p are time-averaged. The ensemble estimate is the mean
of those per-trajectory averages, with the standard error of that mean.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..exceptions import SimulationDivergenceError
from ..ratfun import RationalFunction
from ..schemas import GaussianState, SimulationConfig, SystemModel
from .lyapunov import LinearSystem, closed_loop_system, lyapunov_covariance
from .realization import StateSpaceRealization

logger = logging.getLogger(__name__)

DT_FACTOR = 1e-3
DECAY_TIMES = 50.0
CHUNK_STEPS = 2048
DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class MomentSummary:
    """Count, mean and summed squared deviations of a vector sample.

    ``merge`` is associative, so block summaries can be combined in any
    grouping; combining them in a fixed order keeps results bit-identical.
    """
    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def empty(cls, dim: int) -> "MomentSummary":
        return cls(0, np.zeros(dim), np.zeros(dim))

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "MomentSummary":
        samples = np.atleast_2d(samples)
        mean = samples.mean(axis=0)
        return cls(len(samples), mean, ((samples - mean) ** 2).sum(axis=0))

    def merge(self, other: "MomentSummary") -> "MomentSummary":
        if self.count == 0:
            return other
        if other.count == 0:
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta ** 2 * (self.count * other.count / n)
        return MomentSummary(n, mean, m2)

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.full_like(self.mean, np.nan)
        return self.m2 / (self.count - 1)

    @property
    def standard_error(self) -> np.ndarray:
        return np.sqrt(self.variance / self.count)


@dataclass(frozen=True)
class SimulationResult:
    """Ensemble steady-state estimate of (V_xx, V_pp, V_xp)."""
    state: GaussianState
    standard_error: Tuple[float, float, float]
    summary: MomentSummary
    dt: float
    t_total: float
    n_traj: int

    def brackets(self, expected: GaussianState, n_se: float = 3.0) -> bool:
        """Whether every entry of ``expected`` lies within n_se standard errors."""
        got = (self.state.v_xx, self.state.v_pp, self.state.v_xp)
        want = (expected.v_xx, expected.v_pp, expected.v_xp)
        return all(abs(g - w) <= n_se * se for g, w, se in zip(got, want, self.standard_error))

    def z_scores(self, expected: GaussianState) -> Tuple[float, float, float]:
        got = (self.state.v_xx, self.state.v_pp, self.state.v_xp)
        want = (expected.v_xx, expected.v_pp, expected.v_xp)
        return tuple((g - w) / se if se > 0 else math.inf
                     for g, w, se in zip(got, want, self.standard_error))


def default_timing(system: LinearSystem) -> Tuple[float, float]:
    """(dt, t_total): 1e-3 of the fastest time scale, 50 decay times of the slowest."""
    lam = system.eigenvalues()
    dt = DT_FACTOR / float(np.abs(lam).max())
    t_total = DECAY_TIMES / float(np.abs(lam.real).min())
    return dt, t_total


def _run_block(system: LinearSystem, chol: np.ndarray, n: int, dt: float, n_steps: int,
               n_burn: int, rng: np.random.Generator, limit: float) -> MomentSummary:
    dim = system.dimension
    step = np.eye(dim) + dt * system.drift
    step_t = step.T
    g_t = system.noise_input.T
    mix = math.sqrt(dt) * chol.T @ g_t
    z = np.zeros((n, dim))
    acc = np.zeros((n, 3))
    done = 0
    while done < n_steps:
        m = min(CHUNK_STEPS, n_steps - done)
        kicks = rng.standard_normal((m, n, chol.shape[0])) @ mix
        for k in range(m):
            z = z @ step_t + kicks[k]
            if done + k >= n_burn:
                x, p = z[:, 0], z[:, 1]
                acc[:, 0] += x * x
                acc[:, 1] += p * p
                acc[:, 2] += x * p
        done += m
        peak = float(np.abs(z[:, :2]).max())
        if not math.isfinite(peak) or peak > limit:
            raise SimulationDivergenceError(
                f"trajectory amplitude {peak:.3e} exceeded {limit:.3e} at t={done * dt:.6g}",
                1j * system.eigenvalues(),
            )
    return MomentSummary.from_samples(acc / (n_steps - n_burn))


def simulate_closed_loop(model: SystemModel,
                         c_kernel: Union[RationalFunction, StateSpaceRealization, float],
                         cfg: Optional[SimulationConfig] = None,
                         workers: int = 1) -> SimulationResult:
    """Monte-Carlo estimate of the stationary closed-loop covariance.

    The loop is the oscillator driven by F with the controller u = -C (x + Z).
    Noise increments have covariance W dt with W the 2x2 intensity matrix of
    (F, Z), correlated through its Cholesky factor. Trajectories are split
    into blocks of ``cfg.block_size``; block k draws from a Philox stream
    spawned from ``SeedSequence(cfg.seed)``, so results do not depend on
    ``workers``.

    Raises:
        UnstableLoopError: the closed loop is not stable (checked before running).
        SimulationDivergenceError: trajectories blew up during the run.
    """
    cfg = cfg or SimulationConfig()
    system = closed_loop_system(model, c_kernel).require_stable()
    dt_default, t_default = default_timing(system)
    dt = cfg.dt or dt_default
    t_total = cfg.t_total or t_default
    n_steps = max(int(round(t_total / dt)), 2)
    n_burn = min(int(cfg.burn_in * n_steps), n_steps - 1)
    chol = np.linalg.cholesky(system.intensity)
    scale = math.sqrt(float(np.abs(np.diag(lyapunov_covariance(system))[:2]).max()))
    limit = DIVERGENCE_FACTOR * max(scale, 1e-300)

    sizes = [cfg.block_size] * (cfg.n_traj // cfg.block_size)
    if cfg.n_traj % cfg.block_size:
        sizes.append(cfg.n_traj % cfg.block_size)
    streams = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    logger.info("simulating %d trajectories, %d steps of dt=%.3g (%d blocks)",
                cfg.n_traj, n_steps, dt, len(sizes))

    def block(k: int) -> MomentSummary:
        rng = np.random.Generator(np.random.Philox(streams[k]))
        return _run_block(system, chol, sizes[k], dt, n_steps, n_burn, rng, limit)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        summaries = list(pool.map(block, range(len(sizes))))
    total = MomentSummary.empty(3)
    for s in summaries:
        total = total.merge(s)
    v_xx, v_pp, v_xp = (float(v) for v in total.mean)
    se = tuple(float(v) for v in total.standard_error)
    state = GaussianState(v_xx=v_xx, v_pp=v_pp, v_xp=v_xp)
    return SimulationResult(state, se, total, dt, t_total, cfg.n_traj)
