"""Error hierarchy for the oscillator-control library.

Every error is a ``ValueError`` so existing ``except ValueError`` handlers keep
working. ``PhysicsDomainError`` marks inputs that describe an impossible or
degenerate physical situation (CLI exit code 2); ``ConfigError`` marks a run
configuration that cannot be parsed or validated (exit code 1).
"""


class OscillatorControlError(ValueError):
    """Base class for all library errors."""


class ConfigError(OscillatorControlError):
    """Run configuration could not be loaded or validated."""


# --- numerical / algebraic failures ---------------------------------------

class NumericalError(OscillatorControlError):
    """Algebra or oracle failure."""


class EmptyRootsError(NumericalError):
    """Root finding was asked for the roots of a constant polynomial."""


class RootConvergenceError(NumericalError):
    """Computed roots do not reproduce the polynomial."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


class NonFactorizableError(NumericalError):
    """Spectrum is not real and nonnegative, so it has no spectral factor."""


class MarginalSpectrumError(NumericalError):
    """Spectrum has a real-axis zero or pole of odd order."""


class MarginalPoleError(NumericalError):
    """A pole lies on the real axis; the caller must regularize."""


class DivergentIntegralError(NumericalError):
    """Spectrum does not decay fast enough to be integrable."""

    def __init__(self, power: int):
        super().__init__(
            f"integrand decays like Omega^{power}; need Omega^-2 or faster"
        )
        self.power = power


class SynthesisConsistencyError(NumericalError):
    """Synthesized controller is not causal or not proper."""


class AlgebraConsistencyError(NumericalError):
    """Feedback kernel recovery left spurious structure."""


class ImproperControllerError(NumericalError):
    """Controller makes a controlled variance diverge."""


class InternalConsistencyError(NumericalError):
    """A closed-form identity failed beyond tolerance."""


class RealizationError(NumericalError):
    """Transfer function cannot be realized as requested."""


class UnstableLoopError(NumericalError):
    """Closed loop (or a system assumed stable) has unstable poles."""

    def __init__(self, message: str, poles=None):
        if poles is not None:
            message = f"{message}; poles: {list(poles)}"
        super().__init__(message)
        self.poles = poles


class SimulationDivergenceError(UnstableLoopError):
    """Monte-Carlo trajectories blew up mid-run."""


class EmptyFamilyError(NumericalError):
    """No stable candidate in a controller family grid."""


class ModelDegeneracyError(NumericalError):
    """Riccati equation has no stabilizing solution."""


# --- physics-domain failures ----------------------------------------------

class PhysicsDomainError(OscillatorControlError):
    """Inputs describe an impossible or degenerate physical situation."""


class HeisenbergViolationError(PhysicsDomainError):
    """Noise spectra violate S_ZZ S_FF - S_ZF^2 >= hbar^2."""


class InvalidNoiseError(PhysicsDomainError):
    """Noise triple gives a nonpositive B^2."""


class InvalidParameterError(PhysicsDomainError):
    """Parameters outside the domain of a closed form (e.g. A > B)."""


class DegenerateControllerError(PhysicsDomainError):
    """A = B exactly: the optimal loop has infinite quality factor."""


class OutOfRegimeError(PhysicsDomainError):
    """Closed form evaluated outside its temperature regime."""


class DerivationError(PhysicsDomainError):
    """Readout mapping produced an unphysical noise triple."""
