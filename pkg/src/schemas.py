"""Domain models: oscillator, noise, states, readout and run settings.

All quantities are in natural units (hbar = 1, m = 1) unless a field says
otherwise; ``src.config`` converts SI input before these models are built.
"""

import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import HeisenbergViolationError
from .units import HBAR


class Units(str, Enum):
    """Unit system a configuration section is written in"""
    NATURAL = "natural"
    SI = "si"


class SqueezeClass(str, Enum):
    """Which quadrature of the controlled state is narrower than the trap's"""
    POSITION = "position-squeezed"
    MOMENTUM = "momentum-squeezed"
    NONE = "none"


class Oscillator(BaseModel):
    """Unit-mass oscillator; a free mass has omega_p = 0."""
    model_config = ConfigDict(frozen=True)

    omega_p: float = Field(..., ge=0.0, description="Angular resonance frequency")
    gamma_p: float = Field(default=0.0, ge=0.0, description="Amplitude relaxation rate")

    @property
    def is_free_mass(self) -> bool:
        return self.omega_p == 0.0

    @property
    def quality_factor(self) -> float:
        return math.inf if self.gamma_p == 0 else self.omega_p / self.gamma_p


class MarkovianNoise(BaseModel):
    """Constant single-sided sensing, force and cross spectra."""
    model_config = ConfigDict(frozen=True)

    s_zz: float = Field(..., gt=0.0, description="Sensing-noise spectrum S_ZZ")
    s_ff: float = Field(..., gt=0.0, description="Force-noise spectrum S_FF")
    s_zf: float = Field(default=0.0, description="Real cross spectrum S_ZF")

    @property
    def determinant(self) -> float:
        return self.s_zz * self.s_ff - self.s_zf ** 2

    def scaled(self, c: float) -> "MarkovianNoise":
        return MarkovianNoise(s_zz=c * self.s_zz, s_ff=c * self.s_ff, s_zf=c * self.s_zf)


class SystemModel(BaseModel):
    """Oscillator, its noise and the unit measurement gain H = 1.

    ``omega_q`` is the measurement frequency; a free mass uses it as the
    frequency scale of its homogeneous parameters.
    """
    model_config = ConfigDict(frozen=True)

    osc: Oscillator
    noise: MarkovianNoise
    h_gain: float = Field(default=1.0, description="Measurement transfer function H")
    omega_q: Optional[float] = Field(default=None, gt=0.0)

    @field_validator("h_gain")
    @classmethod
    def _unit_gain(cls, value: float) -> float:
        if value != 1.0:
            raise ValueError("only H = 1 is supported")
        return value

    @property
    def frequency_scale(self) -> float:
        if self.osc.omega_p > 0:
            return self.osc.omega_p
        if self.omega_q is not None:
            return self.omega_q
        return (self.noise.s_ff / self.noise.s_zz) ** 0.25


class GaussianState(BaseModel):
    """Position/momentum covariance of a Gaussian state.

    Construction only checks that the matrix is positive semidefinite so that
    classical covariances (e.g. noiseless Lyapunov solutions) are
    representable; ``require_physical`` enforces the uncertainty bound.
    """
    model_config = ConfigDict(frozen=True)

    v_xx: float = Field(..., ge=0.0)
    v_pp: float = Field(..., ge=0.0)
    v_xp: float = 0.0

    @model_validator(mode="after")
    def _positive_semidefinite(self) -> "GaussianState":
        if self.v_xp ** 2 > self.v_xx * self.v_pp * (1 + 1e-9) + 1e-300:
            raise ValueError(
                f"covariance not positive semidefinite: v_xp^2={self.v_xp ** 2:.6g} "
                f"> v_xx v_pp={self.v_xx * self.v_pp:.6g}"
            )
        return self

    @classmethod
    def from_matrix(cls, cov: np.ndarray) -> "GaussianState":
        cov = np.real(np.asarray(cov))
        return cls(v_xx=float(cov[0, 0]), v_pp=float(cov[1, 1]),
                   v_xp=float(0.5 * (cov[0, 1] + cov[1, 0])))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.v_xx, self.v_xp], [self.v_xp, self.v_pp]])

    @property
    def purity(self) -> float:
        """U = sqrt(V_xx V_pp - V_xp^2)."""
        return math.sqrt(max(self.v_xx * self.v_pp - self.v_xp ** 2, 0.0))

    @property
    def n_eff(self) -> float:
        return self.purity / HBAR - 0.5

    def require_physical(self, atol: float = 1e-12, rtol: float = 0.0) -> "GaussianState":
        """Raise unless U >= hbar/2 within ``atol`` plus ``rtol`` hbar/2."""
        if self.purity < HBAR / 2 * (1.0 - rtol) - atol:
            raise HeisenbergViolationError(
                f"state purity {self.purity:.12g} below hbar/2"
            )
        return self


class ReadoutConfig(BaseModel):
    """Interferometric readout of a test mass."""
    model_config = ConfigDict(frozen=True)

    omega_q: float = Field(..., gt=0.0, description="Characteristic measurement frequency")
    phi: float = Field(default=0.0, description="Homodyne angle; 0 is the phase quadrature")
    squeeze_db: float = Field(default=0.0, ge=0.0, description="Input squeezing in dB")
    squeeze_angle: float = Field(default=0.0, description="Squeezing angle lambda")
    loss: float = Field(default=0.0, ge=0.0, lt=1.0, description="Optical loss epsilon")
    zeta_x: float = Field(default=0.0, ge=0.0, description="Classical sensing-noise level")
    zeta_f: float = Field(default=0.0, ge=0.0, description="Classical force-noise level")

    @field_validator("phi")
    @classmethod
    def _carries_position(cls, value: float) -> float:
        if abs(math.cos(value)) < 1e-12:
            raise ValueError("cos(phi) = 0: the amplitude quadrature carries no position signal")
        return value


class ClassicalBudget(BaseModel):
    """eta_cl^2 = 2 zeta_F zeta_x: how far total classical noise dips below the SQL."""
    model_config = ConfigDict(frozen=True)

    eta_cl2: float = Field(..., ge=0.0)
    force_share: float = Field(
        default=0.5, gt=0.0, lt=1.0,
        description="Log-scale share of the budget put on force noise; 0.5 is symmetric",
    )

    @classmethod
    def from_levels(cls, zeta_f: float, zeta_x: float) -> "ClassicalBudget":
        return cls(eta_cl2=2.0 * zeta_f * zeta_x)

    def split(self) -> tuple:
        """(zeta_F, zeta_x) with product eta_cl2/2; symmetric at share 0.5."""
        level = math.sqrt(self.eta_cl2 / 2.0)
        if level == 0:
            return 0.0, 0.0
        tilt = 2.0 * self.force_share - 1.0
        return level * math.exp(tilt), level * math.exp(-tilt)


class ThermalEnvironment(BaseModel):
    """Viscous bath of a suspended mirror (SI: kelvin, rad/s)."""
    model_config = ConfigDict(frozen=True)

    temperature: float = Field(..., ge=0.0, description="Bath temperature T in K")
    quality_factor: float = Field(..., gt=0.0, description="Mechanical Q_p")
    omega_p: float = Field(..., gt=0.0, description="Resonance in rad/s")


class SimulationConfig(BaseModel):
    """Monte-Carlo closed-loop run; ``None`` fields take pole-based defaults."""
    model_config = ConfigDict(frozen=True)

    dt: Optional[float] = Field(default=None, gt=0.0)
    t_total: Optional[float] = Field(default=None, gt=0.0)
    n_traj: int = Field(default=2000, ge=1)
    seed: int = 42
    burn_in: float = Field(default=0.5, ge=0.0, lt=1.0)
    block_size: int = Field(default=250, ge=1, description="Trajectories per RNG stream")


class ControlMetrics(BaseModel):
    """Scalar figures of merit of an optimally controlled state."""
    model_config = ConfigDict(frozen=True)

    u_ctrl: float
    n_eff: float = Field(..., ge=-1e-12)
    q_eff: float
    eta2: float
    omega_star: float
    entropy: float
    squeeze_class: SqueezeClass
    semiclassical: Optional[float] = None
