"""Ordered eigenvalue spectra and the gap/match/sum machinery built on them.

Everything here is pure and operates on immutable, descending-ordered
spectra.  Indices are 0-based throughout the Python API.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    EmptySpectrumError,
    IndexOutOfRangeError,
    InterlacingViolationError,
    NegativeEigenvalueError,
    NonFiniteError,
    PoleHitError,
    SingletonSpectrumError,
    SizeMismatchError,
    ZeroGapError,
)

# Relative threshold separating "exact atom, skip it" from "dangerously
# close value" in Stieltjes-type sums.
POLE_GUARD = 1e-14


class SpectrumRole(Enum):
    GROUND_TRUTH = "ground_truth"
    SAMPLE = "sample"
    RESTRICTED = "restricted"


@dataclass(frozen=True)
class Spectrum:
    """A non-increasing sequence of non-negative eigenvalues."""

    values: np.ndarray
    role: SpectrumRole

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1:
            raise ValueError("spectrum values must be one-dimensional")
        if vals.size and not np.all(np.isfinite(vals)):
            raise NonFiniteError("spectrum contains non-finite values")
        if vals.size and np.any(np.diff(vals) > 0):
            raise ValueError("spectrum values must be non-increasing")
        if vals.size and vals[-1] < 0:
            raise NegativeEigenvalueError("spectrum contains negative values")

    @property
    def p(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.p

    def __getitem__(self, j: int) -> float:
        return float(self.values[j])

    def scaled(self, t: float) -> "Spectrum":
        return Spectrum(self.values * t, self.role)

    # -- serialization ------------------------------------------------

    def to_csv(self) -> str:
        lines = ["eigenvalue"] + [repr(float(v)) for v in self.values]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, role: SpectrumRole) -> "Spectrum":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "eigenvalue":
            raise ValueError("expected 'eigenvalue' header")
        return sort_spectrum([float(ln) for ln in lines[1:]], role)

    def to_json(self) -> str:
        return json.dumps(list(self.values))

    @classmethod
    def from_json(cls, text: str, role: SpectrumRole) -> "Spectrum":
        return sort_spectrum(json.loads(text), role)


@dataclass(frozen=True)
class ExclusionWindow:
    """Index window [center - half_width, center + half_width], clipped to the spectrum."""

    center: int
    half_width: int

    def indices(self, p: int) -> np.ndarray:
        lo = max(0, self.center - self.half_width)
        hi = min(p - 1, self.center + self.half_width)
        return np.arange(lo, hi + 1)

    def mask(self, p: int) -> np.ndarray:
        m = np.zeros(p, dtype=bool)
        m[self.indices(p)] = True
        return m


def sort_spectrum(raw: Sequence[float], role: SpectrumRole) -> Spectrum:
    """Canonicalize raw eigenvalues: descending order, stable ties; values
    within 1e-10 of zero (relative to the largest magnitude) are treated as
    exact zeros, so rank deficiency produces a clean point mass at 0."""
    vals = np.asarray(raw, dtype=float)
    if vals.size == 0:
        return Spectrum(vals, role)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteError("non-finite eigenvalue")
    tol = 1e-10 * np.max(np.abs(vals)) if vals.size else 0.0
    if np.any(vals < -tol):
        worst = vals.min()
        raise NegativeEigenvalueError(f"eigenvalue {worst} below -{tol}")
    vals = np.where(vals < tol, 0.0, vals)
    order = np.argsort(-vals, kind="stable")
    return Spectrum(vals[order], role)


def spectral_gap(spec: Spectrum, i: int) -> float:
    """Minimum distance from eigenvalue i to its neighbours (one-sided at the ends)."""
    if spec.p < 2:
        raise SingletonSpectrumError("spectral gap needs at least two eigenvalues")
    if not 0 <= i < spec.p:
        raise IndexOutOfRangeError(f"index {i} outside [0, {spec.p})")
    v = spec.values
    if i == 0:
        return float(v[0] - v[1])
    if i == spec.p - 1:
        return float(v[-2] - v[-1])
    return float(min(v[i - 1] - v[i], v[i] - v[i + 1]))


def match_index(sigma2_i: float, sample: Spectrum) -> int:
    """Index of the sample eigenvalue nearest to sigma2_i; ties go to the
    smaller index (the larger eigenvalue)."""
    if sample.p == 0:
        raise EmptySpectrumError("cannot match against an empty spectrum")
    return int(np.argmin(np.abs(sample.values - sigma2_i)))


def stieltjes_sum(
    spec: Spectrum, z: float, window: Optional[ExclusionWindow] = None
) -> float:
    """(1/p) * sum of sigma2_s / (sigma2_s - z) over non-excluded indices.

    Without a window, terms whose eigenvalue equals z exactly are skipped
    (the leave-out-the-atom convention); values merely close to z raise
    PoleHitError.
    """
    if spec.p == 0:
        raise EmptySpectrumError("empty spectrum")
    v = spec.values
    keep = np.ones(spec.p, dtype=bool)
    if window is not None:
        keep &= ~window.mask(spec.p)
    diff = v - z
    atom = (diff == 0.0) & keep
    keep &= ~atom
    close = keep & (np.abs(diff) < POLE_GUARD * np.abs(v))
    if np.any(close):
        raise PoleHitError(f"z={z} too close to eigenvalue {v[close][0]}")
    return float(np.sum(v[keep] / diff[keep]) / spec.p)


@dataclass(frozen=True)
class SignedSpectralShift:
    """Step function G(x) = p*F_full(x) - (p-1)*F_restricted(x).

    breakpoints are the merged sorted eigenvalues; step_values[k] is the
    value of G on the open interval following breakpoints[k] (G is 0
    below the smallest breakpoint).
    """

    breakpoints: np.ndarray
    step_values: np.ndarray
    full: Spectrum = field(repr=False)
    restricted: Spectrum = field(repr=False)

    def eval(self, x: float) -> float:
        n_full = int(np.sum(self.full.values <= x))
        n_res = int(np.sum(self.restricted.values <= x))
        return float(n_full - n_res)

    def total_mass(self) -> float:
        return self.eval(np.inf)

    def alternates(self) -> bool:
        vals = self.step_values
        return bool(
            np.all((vals == 0) | (vals == 1))
            and np.all(np.abs(np.diff(vals)) == 1)
        )


def signed_shift(full: Spectrum, restricted: Spectrum) -> SignedSpectralShift:
    """The one-insertion change of spectral mass between a full spectrum and
    its one-smaller restricted companion."""
    if full.p != restricted.p + 1:
        raise SizeMismatchError(
            f"full spectrum has {full.p} values, expected {restricted.p + 1}"
        )
    bps = np.sort(np.concatenate([full.values, restricted.values]))
    steps = np.array([_count_shift(full, restricted, x) for x in bps])
    return SignedSpectralShift(bps, steps, full, restricted)


def _count_shift(full: Spectrum, restricted: Spectrum, x: float) -> float:
    return float(
        np.sum(full.values <= x) - np.sum(restricted.values <= x)
    )


def shift_ratio(full: Spectrum, restricted: Spectrum, j: int) -> float:
    """Relative position (sigma2_hat_j - nu_j) / (nu_{j-1} - nu_j) of the j-th
    full eigenvalue inside its interlacing interval, descending order.

    Valid for 1 <= j <= p - 1 (0-based), where both bracketing restricted
    eigenvalues exist.
    """
    if full.p != restricted.p + 1:
        raise SizeMismatchError("restricted spectrum must be one shorter")
    if not 1 <= j <= full.p - 2:
        raise IndexOutOfRangeError(f"index {j} has no interlacing bracket")
    if not interlaces(full, restricted):
        raise InterlacingViolationError("spectra do not interlace")
    hi = restricted[j - 1]
    lo = restricted[j]
    if hi == lo:
        raise ZeroGapError(f"restricted gap at {j} is zero")
    return float((full[j] - lo) / (hi - lo))


def interlaces(full: Spectrum, restricted: Spectrum, rtol: float = 1e-12) -> bool:
    """Non-strict Cauchy interlacing check with a small relative tolerance."""
    if full.p != restricted.p + 1:
        raise SizeMismatchError("restricted spectrum must be one shorter")
    if full.p == 1:
        return True
    scale = max(full[0], 1.0)
    tol = rtol * scale
    f = full.values
    r = restricted.values
    return bool(np.all(f[:-1] >= r - tol) and np.all(r >= f[1:] - tol))


def ks_distance(spec: Spectrum, reference_cdf: Callable[[float], float]) -> float:
    """Two-sided Kolmogorov-Smirnov distance between the empirical CDF of the
    spectrum and a reference CDF."""
    if spec.p == 0:
        raise EmptySpectrumError("empty spectrum")
    p = spec.p
    uniq, counts = np.unique(spec.values, return_counts=True)
    cum = np.cumsum(counts)
    d = 0.0
    for x, hi_count, lo_count in zip(uniq, cum, cum - counts):
        # reference evaluated at the atom and just below it (left limit), so
        # reference distributions with their own point masses compare cleanly
        ref_hi = reference_cdf(float(x))
        ref_lo = reference_cdf(float(np.nextafter(x, -np.inf)))
        d = max(d, abs(hi_count / p - ref_hi), abs(lo_count / p - ref_lo))
    return float(d)
