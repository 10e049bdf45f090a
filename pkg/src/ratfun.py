"""Polynomials and rational functions of the angular frequency Omega.

Fourier convention: x(t) = int x~(Omega) exp(-i Omega t) dOmega / 2pi. Under
this convention a rational function is causal when it is analytic in the upper
half-plane, i.e. when every pole has a negative imaginary part.

Polynomials remember the roots they were built from (or computed once), so
products keep exact pole/zero sets and cancellations match identical values
instead of re-rooting expanded coefficients.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate

from .exceptions import (
    AlgebraConsistencyError,
    DivergentIntegralError,
    EmptyRootsError,
    MarginalPoleError,
    MarginalSpectrumError,
    NonFactorizableError,
    RootConvergenceError,
)

logger = logging.getLogger(__name__)

ADD_CANCEL_RTOL = 1e-13
ROOT_RESIDUAL_RTOL = 1e-8
CLUSTER_RTOL = 1e-7
EXACT_CLUSTER_RTOL = 1e-12
CANCEL_RTOL = 1e-8
MARGINAL_RTOL = 1e-12
SPECTRUM_RTOL = 1e-9

Scalar = Union[int, float, complex]


def _scale(value: complex) -> float:
    return max(1.0, abs(value))


def _compute_roots(coeffs: np.ndarray) -> np.ndarray:
    """Companion-matrix eigenvalues with one Newton polish step."""
    if len(coeffs) < 2:
        return np.zeros(0, dtype=complex)
    found = np.asarray(npoly.polyroots(coeffs), dtype=complex)
    deriv = npoly.polyder(coeffs)
    polished = found.copy()
    for k, root in enumerate(found):
        value = npoly.polyval(root, coeffs)
        slope = npoly.polyval(root, deriv)
        if slope == 0:
            continue
        candidate = root - value / slope
        if abs(npoly.polyval(candidate, coeffs)) < abs(value):
            polished[k] = candidate
    rebuilt = coeffs[-1] * npoly.polyfromroots(polished)
    residual = np.linalg.norm(rebuilt - coeffs) / np.linalg.norm(coeffs)
    if residual > ROOT_RESIDUAL_RTOL:
        raise RootConvergenceError("roots do not reproduce polynomial", residual)
    return polished


class RootCluster(NamedTuple):
    value: complex
    multiplicity: int


def _cluster(values: np.ndarray, rtol: float) -> List[RootCluster]:
    clusters: List[RootCluster] = []
    used = np.zeros(len(values), dtype=bool)
    for i, root in enumerate(values):
        if used[i]:
            continue
        close = [
            j for j in range(i, len(values))
            if not used[j] and abs(values[j] - root) <= rtol * _scale(root)
        ]
        used[close] = True
        clusters.append(RootCluster(complex(np.mean(values[close])), len(close)))
    return clusters


class Polynomial:
    """Complex polynomial in Omega with ascending coefficients.

    Trailing zeros are trimmed; the zero polynomial is ``Polynomial([0])``
    with ``is_zero`` set.
    """

    __slots__ = ("_coeffs", "_roots", "_from_roots")
    __array_ufunc__ = None

    def __init__(self, coeffs, _roots=None, _from_roots: bool = False):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).copy()
        nonzero = np.flatnonzero(c)
        c = c[: nonzero[-1] + 1] if len(nonzero) else np.zeros(1, dtype=complex)
        c.setflags(write=False)
        self._coeffs = c
        self._roots = None if _roots is None else np.asarray(_roots, dtype=complex)
        self._from_roots = _from_roots and _roots is not None

    @classmethod
    def from_roots(cls, roots: Sequence[complex], lead: Scalar = 1.0) -> "Polynomial":
        roots = np.asarray(roots, dtype=complex).ravel()
        if lead == 0:
            return cls([0.0])
        coeffs = lead * npoly.polyfromroots(roots) if len(roots) else [lead]
        return cls(coeffs, _roots=roots, _from_roots=True)

    @classmethod
    def constant(cls, value: Scalar) -> "Polynomial":
        return cls.from_roots([], value) if value != 0 else cls([0.0])

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def degree(self) -> int:
        return len(self._coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self._coeffs[0] == 0

    @property
    def lead(self) -> complex:
        return complex(self._coeffs[-1])

    @property
    def defined_by_roots(self) -> bool:
        return self._from_roots

    def zeros(self) -> np.ndarray:
        """Flat array of roots (cached)."""
        if self._roots is None:
            self._roots = _compute_roots(self._coeffs)
            logger.debug("rooted degree-%d polynomial", self.degree)
        return self._roots

    def clusters(self) -> List[RootCluster]:
        rtol = EXACT_CLUSTER_RTOL if self._from_roots else CLUSTER_RTOL
        return _cluster(self.zeros(), rtol)

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=complex)
        if self._from_roots:
            factors = omega[..., None] - self._roots
            return self.lead * np.prod(factors, axis=-1)
        return npoly.polyval(omega, self._coeffs)

    def conj(self) -> "Polynomial":
        """p*(Omega) = conj(p(conj(Omega)))."""
        roots = None if self._roots is None else np.conj(self._roots)
        return Polynomial(np.conj(self._coeffs), roots, self._from_roots)

    def reflect(self) -> "Polynomial":
        """p(-Omega)."""
        signs = (-1.0) ** np.arange(len(self._coeffs))
        roots = None if self._roots is None else -self._roots
        return Polynomial(self._coeffs * signs, roots, self._from_roots)

    def derivative(self) -> "Polynomial":
        return Polynomial(npoly.polyder(self._coeffs))

    def __neg__(self) -> "Polynomial":
        return self * -1.0

    def __add__(self, other) -> "Polynomial":
        if isinstance(other, RationalFunction):
            return NotImplemented
        other = as_polynomial(other)
        n = max(len(self._coeffs), len(other._coeffs))
        a = np.pad(self._coeffs, (0, n - len(self._coeffs)))
        b = np.pad(other._coeffs, (0, n - len(other._coeffs)))
        total = a + b
        # drop top coefficients that cancelled to rounding level
        k = n - 1
        while k > 0 and abs(total[k]) <= ADD_CANCEL_RTOL * (abs(a[k]) + abs(b[k])):
            total[k] = 0.0
            k -= 1
        return Polynomial(total)

    __radd__ = __add__

    def __sub__(self, other) -> "Polynomial":
        if isinstance(other, RationalFunction):
            return NotImplemented
        return self + (-as_polynomial(other))

    def __rsub__(self, other) -> "Polynomial":
        return as_polynomial(other) - self

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            coeffs = npoly.polymul(self._coeffs, other._coeffs)
            if self.is_zero or other.is_zero:
                return Polynomial([0.0])
            # roots of a product are the union of the factors' roots; re-rooting
            # the expanded coefficients would blur nearby pairs
            try:
                roots = np.concatenate([self.zeros(), other.zeros()])
            except RootConvergenceError:
                return Polynomial(coeffs)
            exact = (self._from_roots or self.degree == 0) and \
                (other._from_roots or other.degree == 0)
            return Polynomial(coeffs, roots, exact)
        if isinstance(other, RationalFunction):
            return NotImplemented
        scalar = complex(other)
        if scalar == 0:
            return Polynomial([0.0])
        return Polynomial(self._coeffs * scalar, self._roots, self._from_roots)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        terms = " + ".join(f"({c:.6g})*W^{k}" for k, c in enumerate(self._coeffs))
        return f"Polynomial({terms})"


OMEGA = Polynomial([0.0, 1.0])


def as_polynomial(value) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    return Polynomial.constant(complex(value))


def roots(p: Polynomial) -> List[RootCluster]:
    """Roots of ``p`` with multiplicities.

    Raises:
        EmptyRootsError: ``p`` has degree 0.
        RootConvergenceError: roots fail to reproduce ``p`` within 1e-8.
    """
    if p.degree < 1:
        raise EmptyRootsError("a constant polynomial has no roots")
    return p.clusters()


def _match(a: np.ndarray, b: np.ndarray, rtol: float) -> Tuple[List[int], List[int]]:
    """Greedy nearest matching of ``a`` entries against ``b`` entries."""
    unused = list(range(len(b)))
    matched_a, matched_b = [], []
    for i, value in enumerate(a):
        if not unused:
            break
        dists = [abs(b[j] - value) for j in unused]
        best = int(np.argmin(dists))
        if dists[best] <= rtol * _scale(value):
            matched_a.append(i)
            matched_b.append(unused.pop(best))
    return matched_a, matched_b


def _without(values: np.ndarray, drop: Sequence[int]) -> np.ndarray:
    keep = np.ones(len(values), dtype=bool)
    keep[list(drop)] = False
    return values[keep]


class RationalFunction:
    """num(Omega) / den(Omega); reduction is lazy, see ``reduced``."""

    __slots__ = ("num", "den")
    __array_ufunc__ = None

    def __init__(self, num, den=1.0):
        self.num = as_polynomial(num)
        self.den = as_polynomial(den)
        if self.den.is_zero:
            raise AlgebraConsistencyError("rational function with zero denominator")

    @classmethod
    def from_zpk(cls, zeros, poles, gain: Scalar) -> "RationalFunction":
        return cls(Polynomial.from_roots(zeros, gain), Polynomial.from_roots(poles))

    @classmethod
    def constant(cls, value: Scalar) -> "RationalFunction":
        return cls(value)

    def __call__(self, omega):
        return self.num(omega) / self.den(omega)

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def relative_degree(self) -> float:
        if self.num.is_zero:
            return math.inf
        return self.den.degree - self.num.degree

    def is_proper(self, strict: bool = False) -> bool:
        return self.relative_degree >= (1 if strict else 0)

    def zeros(self) -> np.ndarray:
        return np.zeros(0, dtype=complex) if self.num.is_zero else self.num.zeros()

    def poles(self) -> np.ndarray:
        return self.den.zeros()

    def is_causal(self) -> bool:
        return all(p.imag < -MARGINAL_RTOL * _scale(p) for p in self.reduced().poles())

    def conj(self) -> "RationalFunction":
        return RationalFunction(self.num.conj(), self.den.conj())

    def reflect(self) -> "RationalFunction":
        return RationalFunction(self.num.reflect(), self.den.reflect())

    def reduced(self) -> "RationalFunction":
        """Cancel common roots of numerator and denominator (rtol 1e-8)."""
        if self.num.is_zero:
            return RationalFunction(0.0, 1.0)
        zn, zd = self.zeros(), self.poles()
        mn, md = _match(zn, zd, CANCEL_RTOL)
        if mn:
            logger.debug("cancelled %d pole/zero pairs", len(mn))
        gain = self.num.lead / self.den.lead
        return RationalFunction(
            Polynomial.from_roots(_without(zn, mn), gain),
            Polynomial.from_roots(_without(zd, md)),
        )

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den)

    def __add__(self, other) -> "RationalFunction":
        other = as_rational(other)
        a, b = self.poles(), other.poles()
        ma, mb = _match(a, b, CANCEL_RTOL)
        extra_b = _without(b, mb)
        extra_a = _without(a, ma)
        lcm = Polynomial.from_roots(np.concatenate([a, extra_b]))
        num = (
            self.num * Polynomial.from_roots(extra_b, 1.0 / self.den.lead)
            + other.num * Polynomial.from_roots(extra_a, 1.0 / other.den.lead)
        )
        return RationalFunction(num, lcm)

    __radd__ = __add__

    def __sub__(self, other) -> "RationalFunction":
        return self + (-as_rational(other))

    def __rsub__(self, other) -> "RationalFunction":
        return as_rational(other) - self

    def __mul__(self, other) -> "RationalFunction":
        other = as_rational(other)
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RationalFunction":
        other = as_rational(other)
        if other.is_zero:
            raise AlgebraConsistencyError("division by the zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> "RationalFunction":
        return as_rational(other) / self

    def __repr__(self) -> str:
        return f"RationalFunction(zeros={np.round(self.zeros(), 8)}, " \
               f"poles={np.round(self.poles(), 8)}, gain={self.num.lead / self.den.lead:.8g})"


def as_rational(value) -> RationalFunction:
    if isinstance(value, RationalFunction):
        return value
    return RationalFunction(as_polynomial(value))


@dataclass(frozen=True)
class SpectralDensity:
    """Single-sided spectral density carried by a rational function of Omega."""

    rat: RationalFunction
    single_sided: bool = True

    def __call__(self, omega):
        return self.rat(omega)

    def check(self, grid: Optional[np.ndarray] = None, auto: bool = True) -> None:
        """Verify the spectrum is real and nonnegative (and even if ``auto``).

        Raises:
            NonFactorizableError: on a complex value or a negative lobe.
        """
        if grid is None:
            half = np.logspace(-3, 3, 400) * _spectrum_scale(self.rat)
            grid = np.concatenate([-half[::-1], half])
        values = np.asarray(self.rat(grid))
        finite = np.isfinite(values)
        values, grid = values[finite], grid[finite]
        ref = np.max(np.abs(values)) if len(values) else 0.0
        if ref == 0:
            return
        tol = SPECTRUM_RTOL * ref
        if np.max(np.abs(values.imag)) > tol:
            raise NonFactorizableError("spectrum is not real on the real axis")
        if np.min(values.real) < -tol:
            raise NonFactorizableError(
                f"spectrum has a negative lobe (min {np.min(values.real):.3e})"
            )
        if auto and np.max(np.abs(values - self.rat(-grid))) > tol:
            raise NonFactorizableError("auto-spectrum is not even in Omega")


def _spectrum_scale(r: RationalFunction) -> float:
    roots = np.concatenate([r.zeros(), r.poles()])
    roots = roots[np.abs(roots) > 0]
    return float(np.exp(np.mean(np.log(np.abs(roots))))) if len(roots) else 1.0


def _as_rat(s: Union[SpectralDensity, RationalFunction]) -> RationalFunction:
    return s.rat if isinstance(s, SpectralDensity) else s


def _half_plane_roots(poly: Polynomial, kind: str) -> List[complex]:
    selected: List[complex] = []
    for value, mult in poly.clusters():
        if abs(value.imag) <= MARGINAL_RTOL * _scale(value):
            if mult % 2:
                raise MarginalSpectrumError(
                    f"real-axis {kind} at {value.real:.6g} of odd order {mult}"
                )
            logger.warning("real-axis %s of order %d at %.6g split evenly",
                           kind, mult, value.real)
            selected += [value] * (mult // 2)
        elif value.imag < 0:
            selected += [value] * mult
    if 2 * len(selected) != poly.degree:
        raise NonFactorizableError(f"{kind}s do not come in conjugate pairs")
    return selected


def spectral_factorize(s: Union[SpectralDensity, RationalFunction]) -> RationalFunction:
    """Causal, causally invertible factor phi_+ with phi_+ phi_+^* = S.

    Zeros and poles of phi_+ are the lower half-plane roots of S, so both
    phi_+ and 1/phi_+ are analytic in the upper half-plane.

    Raises:
        NonFactorizableError: S is not real and nonnegative.
        MarginalSpectrumError: S has a real-axis root of odd order.
    """
    density = s if isinstance(s, SpectralDensity) else SpectralDensity(s)
    density.check()
    r = density.rat.reduced()
    c = r.num.lead / r.den.lead
    if c.real <= 0 or abs(c.imag) > SPECTRUM_RTOL * abs(c):
        raise NonFactorizableError(f"leading ratio {c:.6g} is not positive")
    zeros = _half_plane_roots(r.num, "zero") if r.num.degree else []
    poles = _half_plane_roots(r.den, "pole") if r.den.degree else []
    return RationalFunction.from_zpk(zeros, poles, math.sqrt(c.real))


class PoleTerm(NamedTuple):
    pole: complex
    coeffs: Tuple[complex, ...]  # coefficient of 1/(Omega - pole)^k, k = 1..m


@dataclass(frozen=True)
class PartialFractions:
    polynomial: Polynomial
    terms: Tuple[PoleTerm, ...]


def _taylor(coeffs: np.ndarray, at: complex, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    c = np.asarray(coeffs, dtype=complex)
    for j in range(n):
        out[j] = npoly.polyval(at, c) / math.factorial(j) if len(c) else 0.0
        c = npoly.polyder(c) if len(c) > 1 else np.zeros(0)
    return out


def partial_fractions(r: RationalFunction) -> PartialFractions:
    """Polynomial part plus sum of c_k / (Omega - p)^k over pole clusters."""
    num, den = r.num, r.den
    if den.degree == 0:
        return PartialFractions(Polynomial(num.coeffs / den.lead), ())
    quotient, remainder = npoly.polydiv(num.coeffs, den.coeffs)
    clusters = den.clusters()
    terms = []
    for k, (pole, mult) in enumerate(clusters):
        others = np.concatenate(
            [[v] * m for i, (v, m) in enumerate(clusters) if i != k] or [[]]
        ).astype(complex)
        t_num = _taylor(remainder, pole, mult)
        t_den = _taylor(den.lead * npoly.polyfromroots(others)
                        if len(others) else [den.lead], pole, mult)
        g = np.zeros(mult, dtype=complex)
        for j in range(mult):
            g[j] = (t_num[j] - np.dot(t_den[1:j + 1], g[:j][::-1])) / t_den[0]
        terms.append(PoleTerm(pole, tuple(g[mult - q] for q in range(1, mult + 1))))
    return PartialFractions(Polynomial(quotient), tuple(terms))


def _assemble(terms: Sequence[PoleTerm], poly: Polynomial) -> RationalFunction:
    all_roots = np.array(
        [t.pole for t in terms for _ in t.coeffs], dtype=complex
    )
    den = Polynomial.from_roots(all_roots)
    num = poly * den
    for term in terms:
        for k, c in enumerate(term.coeffs, start=1):
            drop = [i for i, v in enumerate(all_roots) if v == term.pole][:k]
            num = num + Polynomial.from_roots(_without(all_roots, drop), c)
    return RationalFunction(num, den)


def _require_off_axis(pf: PartialFractions) -> None:
    for term in pf.terms:
        if abs(term.pole.imag) <= MARGINAL_RTOL * _scale(term.pole):
            raise MarginalPoleError(
                f"pole at {term.pole:.6g} lies on the real axis; regularize first"
            )


def causal_part(r: RationalFunction) -> RationalFunction:
    """[r]_+: lower half-plane pole terms plus the constant of the polynomial part.

    Raises:
        MarginalPoleError: a pole lies on the real axis.
    """
    pf = partial_fractions(r)
    _require_off_axis(pf)
    keep = [t for t in pf.terms if t.pole.imag < 0]
    return _assemble(keep, Polynomial.constant(pf.polynomial.coeffs[0]))


def initial_value(r: RationalFunction) -> complex:
    """g(0+) of the causal kernel of r: the limit of -i Omega r(Omega) at infinity.

    Raises:
        AlgebraConsistencyError: r has a polynomial part (an impulse at t = 0).
    """
    pf = partial_fractions(r)
    residues = [t.coeffs[0] for t in pf.terms]
    size = sum(abs(c) for c in residues)
    if not pf.polynomial.is_zero and \
            np.max(np.abs(pf.polynomial.coeffs)) > CANCEL_RTOL * max(size, 1.0):
        raise AlgebraConsistencyError(f"kernel is not strictly proper: {pf.polynomial}")
    return complex(-1j * sum(residues))


def anticausal_part(r: RationalFunction) -> RationalFunction:
    """Upper half-plane pole terms of ``r``."""
    pf = partial_fractions(r)
    _require_off_axis(pf)
    keep = [t for t in pf.terms if t.pole.imag > 0]
    return _assemble(keep, Polynomial([0.0]))


def integrate_spectrum(s: Union[SpectralDensity, RationalFunction]) -> float:
    """int_0^inf S(Omega) dOmega / 2pi by residues of the even extension.

    Raises:
        DivergentIntegralError: S decays slower than Omega^-2.
        MarginalPoleError: S has a real-axis pole.
    """
    r = _as_rat(s).reduced()
    if r.is_zero:
        return 0.0
    if r.relative_degree < 2:
        raise DivergentIntegralError(int(-r.relative_degree))
    even = (r + r.reflect()) * 0.5
    if even.is_zero:
        return 0.0
    pf = partial_fractions(even)
    _require_off_axis(pf)
    total = sum(t.coeffs[0] for t in pf.terms if t.pole.imag > 0)
    value = 0.5j * total
    if abs(value.imag) > 1e-6 * max(abs(value.real), 1e-300):
        logger.debug("residue integral has imaginary part %.3e", value.imag)
    return float(value.real)


def integrate_spectrum_quad(s: Union[SpectralDensity, RationalFunction]) -> float:
    """Adaptive-quadrature counterpart of ``integrate_spectrum``."""
    r = _as_rat(s)
    if r.relative_degree < 2:
        raise DivergentIntegralError(int(-r.relative_degree))

    def integrand(w: float) -> float:
        return float(np.real(r(w))) / (2.0 * math.pi)

    poles = r.poles()
    scale = max([1.0] + [abs(p) for p in poles])
    cut = 20.0 * scale
    breaks = sorted({abs(p.real) for p in poles if 0 < abs(p.real) < cut})
    head, _ = integrate.quad(integrand, 0.0, cut, points=breaks or None,
                             limit=1000, epsabs=1e-15, epsrel=1e-12)
    tail, _ = integrate.quad(integrand, cut, np.inf, limit=1000,
                             epsabs=1e-15, epsrel=1e-12)
    return head + tail
