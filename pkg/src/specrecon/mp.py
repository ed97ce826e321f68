"""Marchenko-Pastur closed form and the numeric fixed point for the limiting
sample-covariance spectrum of a general discrete population measure.

Aspect-ratio convention: c = n / p everywhere in the API; the MP shape
parameter lam = p / n = 1 / c lives only inside MPLaw.  The fixed point is
solved for the companion transform (the n x n Gram side), then converted to
the Stieltjes transform of the p x p sample spectrum, which is the quantity
whose imaginary part recovers the density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import (
    NegativeDensityError,
    NoConvergenceError,
    QuadratureFailureError,
)

FIXED_POINT_TOL = 1e-12
FIXED_POINT_CAP = 10_000
DAMPING = 0.5


@dataclass(frozen=True)
class MPLaw:
    """Null-case (identity population) limiting law with ratio lam = p/n."""

    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("ratio must be positive")

    @property
    def a(self) -> float:
        return (1.0 - math.sqrt(self.lam)) ** 2

    @property
    def b(self) -> float:
        return (1.0 + math.sqrt(self.lam)) ** 2

    @property
    def point_mass_at_zero(self) -> float:
        return max(0.0, 1.0 - 1.0 / self.lam)

    @classmethod
    def from_c(cls, c: float) -> "MPLaw":
        return cls(lam=1.0 / c)


def mp_density(x: float, law: MPLaw) -> float:
    """Continuous MP density; zero outside [a, b]."""
    a, b = law.a, law.b
    if x <= a or x >= b or x <= 0:
        return 0.0
    return math.sqrt((b - x) * (x - a)) / (2.0 * math.pi * law.lam * x)


def mp_cdf(x: float, law: MPLaw) -> float:
    """Point mass at zero plus quadrature of the continuous density."""
    if x < 0:
        return 0.0
    total = law.point_mass_at_zero
    if x <= law.a:
        return total
    hi = min(x, law.b)
    val, err = integrate.quad(mp_density, law.a, hi, args=(law,), limit=200)
    if err > 1e-6:
        raise QuadratureFailureError(f"MP cdf quadrature error {err}")
    return min(1.0, total + val)


@dataclass(frozen=True)
class LimitSpectrum:
    """Discrete population measure (atoms + weights) and aspect ratio c."""

    atoms: np.ndarray
    weights: np.ndarray
    c: float

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        atoms.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if atoms.size != weights.size or atoms.size == 0:
            raise ValueError("atoms and weights must be non-empty and aligned")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        if self.c <= 0:
            raise ValueError("c must be positive")

    @classmethod
    def point_mass(cls, value: float, c: float) -> "LimitSpectrum":
        return cls(np.array([value]), np.array([1.0]), c)

    @classmethod
    def from_spectrum_values(cls, values: Sequence[float], c: float) -> "LimitSpectrum":
        vals = np.asarray(values, dtype=float)
        return cls(vals, np.full(vals.size, 1.0 / vals.size), c)


@dataclass(frozen=True)
class FixedPointResult:
    m: complex           # Stieltjes transform of the sample-spectrum limit
    density: float       # Im(m) / pi
    residual: float      # defining-equation residual of the companion transform
    iterations: int


def _companion_map(m: complex, z: complex, spec: LimitSpectrum, y: float) -> complex:
    integral = np.sum(spec.weights * spec.atoms / (1.0 + spec.atoms * m))
    return -1.0 / (z - y * integral)


def stieltjes_fixed_point(
    z_real: float, eta: float, spec: LimitSpectrum
) -> FixedPointResult:
    """Solve the self-consistent equation at z = z_real + i*eta.

    Damped fixed-point iteration on the companion transform
        m <- (1-w) m + w * (-1) / (z - (p/n) * int t/(1+tm) dF(t)),
    Newton-polished when plain damping converges slowly, then converted to
    the sample-side Stieltjes transform.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    z = complex(z_real, eta)
    y = 1.0 / spec.c  # p / n
    m = -1.0 / z
    it = 0
    converged = False
    for it in range(1, FIXED_POINT_CAP + 1):
        nxt = (1.0 - DAMPING) * m + DAMPING * _companion_map(m, z, spec, y)
        if abs(nxt - m) < FIXED_POINT_TOL * max(1.0, abs(nxt)):
            m = nxt
            converged = True
            break
        m = nxt
        if it == 500:
            polished = _newton_polish(m, z, spec, y)
            if polished is not None:
                m = polished
                converged = True
                break
    if not converged:
        polished = _newton_polish(m, z, spec, y)
        if polished is None:
            raise NoConvergenceError(f"fixed point stalled at z={z}")
        m = polished
    residual = abs(-1.0 / m - z + y * np.sum(spec.weights * spec.atoms / (1.0 + spec.atoms * m)))
    if m.imag < -1e-10:
        raise NegativeDensityError(f"companion transform on wrong branch at z={z}")
    m_sample = (m + (1.0 - y) / z) / y
    density = m_sample.imag / math.pi
    if density < -1e-8:
        raise NegativeDensityError(f"negative density {density} at z={z}")
    return FixedPointResult(m=m_sample, density=max(density, 0.0), residual=residual, iterations=it)


def _newton_polish(m0: complex, z: complex, spec: LimitSpectrum, y: float,
                   steps: int = 100) -> Optional[complex]:
    """Newton on g(m) = m (z - y*int) + 1 = 0; returns None on failure."""
    m = m0
    for _ in range(steps):
        denom_terms = 1.0 + spec.atoms * m
        if np.any(denom_terms == 0):
            return None
        integral = np.sum(spec.weights * spec.atoms / denom_terms)
        g = m * (z - y * integral) + 1.0
        d_integral = -np.sum(spec.weights * spec.atoms**2 / denom_terms**2)
        gp = z - y * integral - m * y * d_integral
        if gp == 0:
            return None
        step = g / gp
        m = m - step
        if abs(step) < FIXED_POINT_TOL * max(1.0, abs(m)):
            if m.imag <= 0:
                return None
            return m
    return None


def limit_density_curve(
    spec: LimitSpectrum, grid: np.ndarray, eta: float = 1e-3
) -> np.ndarray:
    """Density extracted along a grid of real abscissae."""
    return np.array([stieltjes_fixed_point(x, eta, spec).density for x in grid])
