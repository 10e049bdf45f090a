"""Run configuration: one declarative JSON or TOML document per run.

Every physical section carries ``units = "natural" | "si"``. SI sections are
converted to natural units (hbar = 1, m = 1) here, through
``units.NaturalScale``, before any domain model is built.
"""

import hashlib
import json
import logging
import os
import sys
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .colddamp import FIG2_LEFT_THETAS, critical_temperature, thermal_model
from .exceptions import ConfigError
from .optics import alpha_from_power, omega_q_from_alpha, to_markovian
from .schemas import (
    MarkovianNoise,
    Oscillator,
    ReadoutConfig,
    SimulationConfig,
    SystemModel,
    ThermalEnvironment,
    Units,
)
from .units import NaturalScale

logger = logging.getLogger(__name__)

WORKERS_ENV = "OSCCTRL_WORKERS"
LOG_LEVEL_ENV = "OSCCTRL_LOG_LEVEL"


class RunMode(str, Enum):
    """Command a configuration is meant for"""
    ANALYZE = "analyze"
    SWEEP = "sweep"
    OPTIMIZE = "optimize"
    VERIFY = "verify"
    FIG2 = "fig2"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class OscillatorSection(_Section):
    """Oscillator; SI input needs the mass (and omega_s for a free mass)."""
    units: Units = Units.NATURAL
    omega_p: float = Field(..., ge=0.0)
    gamma_p: float = Field(default=0.0, ge=0.0)
    mass_kg: Optional[float] = Field(default=None, gt=0.0)
    omega_s: Optional[float] = Field(default=None, gt=0.0, description="SI frequency scale of a free mass")

    @model_validator(mode="after")
    def _si_complete(self) -> "OscillatorSection":
        if self.units is Units.SI:
            if self.mass_kg is None:
                raise ValueError("SI oscillator needs mass_kg")
            if self.omega_p == 0 and self.omega_s is None:
                raise ValueError("SI free mass needs omega_s")
        return self

    def scale(self) -> Optional[NaturalScale]:
        if self.units is Units.NATURAL:
            return None
        return NaturalScale(self.mass_kg, self.omega_p if self.omega_p > 0 else self.omega_s)

    def to_oscillator(self) -> Oscillator:
        scale = self.scale()
        if scale is None:
            return Oscillator(omega_p=self.omega_p, gamma_p=self.gamma_p)
        return Oscillator(omega_p=scale.frequency(self.omega_p), gamma_p=scale.frequency(self.gamma_p))


class NoiseSection(_Section):
    """Markovian spectra; SI values in m^2/Hz, N^2/Hz and m N/Hz."""
    units: Units = Units.NATURAL
    s_zz: float = Field(..., gt=0.0)
    s_ff: float = Field(..., gt=0.0)
    s_zf: float = 0.0


class ReadoutSection(_Section):
    """Interferometer readout of a free mass.

    In SI, omega_q is in rad/s; it can instead be derived from the carrier
    frequency, circulating power and transmissivity (with the oscillator mass).
    """
    units: Units = Units.NATURAL
    omega_q: Optional[float] = Field(default=None, gt=0.0)
    carrier_omega: Optional[float] = Field(default=None, gt=0.0)
    circulating_power: Optional[float] = Field(default=None, gt=0.0)
    transmissivity: Optional[float] = Field(default=None, gt=0.0)
    phi: float = 0.0
    squeeze_db: float = Field(default=0.0, ge=0.0)
    squeeze_angle: float = 0.0
    loss: float = Field(default=0.0, ge=0.0, lt=1.0)
    zeta_x: float = Field(default=0.0, ge=0.0)
    zeta_f: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _strength_given(self) -> "ReadoutSection":
        power = (self.carrier_omega, self.circulating_power, self.transmissivity)
        if self.omega_q is None and any(v is None for v in power):
            raise ValueError("readout needs omega_q or carrier_omega, circulating_power and transmissivity")
        if self.omega_q is None and self.units is Units.NATURAL:
            raise ValueError("optical power inputs are SI; set units = 'si'")
        return self


class ThermalSection(_Section):
    """Cold damping: SI bath (temperature, Q, omega_p, omega_q) or natural (theta, x)."""
    units: Units = Units.NATURAL
    theta: Optional[float] = Field(default=None, ge=0.0)
    x: Optional[float] = Field(default=None, gt=0.0, description="Omega_q^2 / omega_p^2")
    temperature: Optional[float] = Field(default=None, ge=0.0)
    quality_factor: Optional[float] = Field(default=None, gt=0.0)
    omega_p: Optional[float] = Field(default=None, gt=0.0)
    omega_q: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _complete(self) -> "ThermalSection":
        if self.units is Units.NATURAL and self.theta is None:
            raise ValueError("natural thermal section needs theta")
        if self.units is Units.SI and None in (self.temperature, self.quality_factor, self.omega_p):
            raise ValueError("SI thermal section needs temperature, quality_factor and omega_p")
        return self

    def reduced(self) -> Tuple[float, Optional[float]]:
        """(theta, x) of the section."""
        if self.units is Units.NATURAL:
            return self.theta, self.x
        env = ThermalEnvironment(temperature=self.temperature,
                                 quality_factor=self.quality_factor, omega_p=self.omega_p)
        _, theta = critical_temperature(env)
        x = None if self.omega_q is None else (self.omega_q / self.omega_p) ** 2
        return theta, x


class AxisSpec(_Section):
    """One sweep axis: explicit values, or start/stop/num with optional log spacing."""
    name: str
    values: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    num: int = Field(default=11, ge=1)
    log: bool = False

    @model_validator(mode="after")
    def _defined(self) -> "AxisSpec":
        if self.values is None and (self.start is None or self.stop is None):
            raise ValueError(f"axis {self.name!r} needs values or start/stop")
        if self.log:
            ends = self.values if self.values is not None else [self.start, self.stop]
            if any(v <= 0 for v in ends):
                raise ValueError(f"log-spaced axis {self.name!r} has nonpositive values")
        return self

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.log:
            return np.geomspace(self.start, self.stop, self.num)
        return np.linspace(self.start, self.stop, self.num)


class SweepSection(_Section):
    """Sweep axes, and the figure presets' parameters."""
    axes: List[AxisSpec] = Field(default_factory=list, max_length=2)
    thetas: List[float] = Field(default_factory=lambda: list(FIG2_LEFT_THETAS))
    x: AxisSpec = AxisSpec(name="x", start=1e-2, stop=1e4, num=121, log=True)
    eta_cl2: AxisSpec = AxisSpec(name="eta_cl2", start=1e-3, stop=1.0, num=13, log=True)
    squeeze_levels: List[float] = Field(default_factory=lambda: [0.0, 10.0])
    loss: float = Field(default=0.01, ge=0.0, lt=1.0)
    force_share: float = Field(default=0.5, gt=0.0, lt=1.0)
    grid_points: int = Field(default=32, ge=4)


class OutputSection(_Section):
    path: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV

    @field_validator("path")
    @classmethod
    def _writable(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            parent = Path(value).expanduser().resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise ValueError(f"output directory {parent} is not writable")
        return value


class RunConfig(_Section):
    """Complete run description; exactly one of noise, readout or thermal."""
    mode: RunMode = RunMode.ANALYZE
    oscillator: Optional[OscillatorSection] = None
    noise: Optional[NoiseSection] = None
    readout: Optional[ReadoutSection] = None
    thermal: Optional[ThermalSection] = None
    sweep: SweepSection = SweepSection()
    output: OutputSection = OutputSection()
    simulation: SimulationConfig = SimulationConfig()
    seed: int = 42

    @model_validator(mode="after")
    def _one_system(self) -> "RunConfig":
        present = [k for k in ("noise", "readout", "thermal") if getattr(self, k) is not None]
        if len(present) > 1:
            raise ValueError(f"exactly one system section allowed, got {present}")
        if self.noise is not None and self.oscillator is None:
            raise ValueError("a noise section needs an oscillator section")
        if self.noise is not None and self.noise.units is Units.SI and \
                (self.oscillator.units is not Units.SI):
            raise ValueError("SI noise needs an SI oscillator (for the mass and frequency scale)")
        return self

    @property
    def system_kind(self) -> Optional[str]:
        for kind in ("noise", "readout", "thermal"):
            if getattr(self, kind) is not None:
                return kind
        return None


def _readout_config(cfg: RunConfig) -> ReadoutConfig:
    section = cfg.readout
    fields = section.model_dump(include={"phi", "squeeze_db", "squeeze_angle", "loss", "zeta_x", "zeta_f"})
    if section.units is Units.NATURAL:
        return ReadoutConfig(omega_q=section.omega_q, **fields)
    # an SI free mass is measured in units of its own Omega_q
    logger.info("readout Omega_q = %.6g rad/s sets the frequency unit", readout_omega_q_si(cfg))
    return ReadoutConfig(omega_q=1.0, **fields)


def readout_omega_q_si(cfg: RunConfig) -> Optional[float]:
    """Omega_q in rad/s for SI readout sections (None otherwise).

    Raises:
        ConfigError: Omega_q must come from optical power but no mass is given.
    """
    section = cfg.readout
    if section is None or section.units is Units.NATURAL:
        return None
    if section.omega_q is not None:
        return section.omega_q
    if cfg.oscillator is None or cfg.oscillator.mass_kg is None:
        raise ConfigError("deriving omega_q from optical power needs oscillator.mass_kg")
    alpha = alpha_from_power(section.carrier_omega, section.circulating_power, section.transmissivity)
    return omega_q_from_alpha(alpha, cfg.oscillator.mass_kg)


def build_model(cfg: RunConfig, strength: Optional[float] = None) -> SystemModel:
    """Natural-unit SystemModel of the configured system.

    Args:
        cfg: Run configuration.
        strength: Cold-damping strength x, overriding the section's value.

    Raises:
        ConfigError: no system section, or a section that cannot be converted.
    """
    kind = cfg.system_kind
    if kind is None:
        raise ConfigError("configuration has no noise, readout or thermal section")
    if kind == "thermal":
        theta, x = cfg.thermal.reduced()
        x = strength if strength is not None else x
        if x is None:
            raise ConfigError("thermal section needs a measurement strength x (or omega_q in SI)")
        return thermal_model(theta, x)
    if kind == "readout":
        try:
            readout = _readout_config(cfg)
        except ValidationError as exc:
            raise ConfigError(f"invalid readout section: {exc}") from exc
        return SystemModel(osc=Oscillator(omega_p=0.0), noise=to_markovian(readout),
                           omega_q=readout.omega_q)
    osc = cfg.oscillator.to_oscillator()
    section = cfg.noise
    scale = cfg.oscillator.scale()
    if section.units is Units.SI:
        noise = MarkovianNoise(
            s_zz=scale.position_spectrum(section.s_zz),
            s_ff=scale.force_spectrum(section.s_ff),
            s_zf=scale.cross_spectrum(section.s_zf),
        )
    else:
        noise = MarkovianNoise(s_zz=section.s_zz, s_ff=section.s_ff, s_zf=section.s_zf)
    omega_q = None
    if osc.omega_p == 0 and cfg.oscillator.units is Units.SI:
        omega_q = 1.0
    return SystemModel(osc=osc, noise=noise, omega_q=omega_q)


def _parse(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        return tomllib.loads(text)
    return json.loads(text)


def load_config(path: Union[str, Path], seed: Optional[int] = None) -> RunConfig:
    """Read and validate a configuration document.

    Raises:
        ConfigError: unreadable file, syntax error or failed validation.
    """
    path = Path(path)
    try:
        raw = _parse(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"configuration file {path} not found") from exc
    except (OSError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if seed is not None:
        raw["seed"] = seed
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    # the simulation seed follows the run seed unless set explicitly
    if "seed" not in (raw.get("simulation") or {}):
        cfg = cfg.model_copy(update={"simulation": cfg.simulation.model_copy(update={"seed": cfg.seed})})
    return cfg


def config_hash(cfg: RunConfig) -> str:
    """Short SHA-256 of the canonical JSON form of ``cfg``."""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class Settings(BaseModel):
    """Process-level defaults read from the environment (and a .env file)."""
    workers: int = Field(default=1, ge=1)
    log_level: str = "WARNING"


def load_settings() -> Settings:
    load_dotenv()
    raw = {}
    if os.getenv(WORKERS_ENV):
        raw["workers"] = os.getenv(WORKERS_ENV)
    if os.getenv(LOG_LEVEL_ENV):
        raw["log_level"] = os.getenv(LOG_LEVEL_ENV).upper()
    try:
        return Settings.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid environment settings: {exc}") from exc
