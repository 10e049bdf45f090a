"""Natural units and the SI boundary.

Internally hbar = 1 and the oscillator mass is 1. Times are measured in units
of 1/omega_s for a chosen frequency scale omega_s (omega_p when the oscillator
has a restoring force, the measurement frequency Omega_q for a free mass).
SI inputs are converted here and nowhere else.
"""

from dataclasses import dataclass
import math

from scipy import constants

HBAR = 1.0

HBAR_SI = constants.hbar
K_B_SI = constants.k


@dataclass(frozen=True)
class NaturalScale:
    """Conversion factors for a mass ``mass_kg`` and frequency ``omega_s``.

    Length unit sqrt(hbar/(m omega_s)), force unit m omega_s^2 x_s, time unit
    1/omega_s. In these units a position spectrum times a force spectrum is
    measured in hbar^2, which is what makes mu dimensionless.
    """

    mass_kg: float
    omega_s: float

    def __post_init__(self):
        if self.mass_kg <= 0 or self.omega_s <= 0:
            raise ValueError("mass and frequency scale must be positive")

    @property
    def length(self) -> float:
        return math.sqrt(HBAR_SI / (self.mass_kg * self.omega_s))

    @property
    def force(self) -> float:
        return self.mass_kg * self.omega_s ** 2 * self.length

    def frequency(self, omega_si: float) -> float:
        return omega_si / self.omega_s

    def position_spectrum(self, s_si: float) -> float:
        """m^2/Hz -> natural."""
        return s_si * self.omega_s / self.length ** 2

    def force_spectrum(self, s_si: float) -> float:
        """N^2/Hz -> natural."""
        return s_si * self.omega_s / self.force ** 2

    def cross_spectrum(self, s_si: float) -> float:
        """m N/Hz -> natural."""
        return s_si * self.omega_s / (self.length * self.force)


def critical_temperature_si(omega_p: float, quality_factor: float) -> float:
    """T_c = hbar omega_p Q_p / (2 sqrt(2) k_B) in kelvin."""
    return HBAR_SI * omega_p * quality_factor / (2.0 * math.sqrt(2.0) * K_B_SI)
