"""Exact arrowhead secular equation: one-dimension-insertion eigenvalues with
guaranteed interlacing brackets, plus the locality-of-insertion diagnostics."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BracketFailureError,
    InterlacingViolationError,
    NoConvergenceError,
    PoleHitError,
    SizeMismatchError,
)
from .lab import PerturbationColumn
from .spectrum import Spectrum, SpectrumRole, interlaces, sort_spectrum

MAX_ROOT_ITER = 200
DEFLATE_REL = 1e-14


@dataclass(frozen=True)
class SecularProblem:
    """Root problem f(y) = e_diag - sum_s e_off_s^2 / (nu_s - y) - y = 0.

    The p roots are the eigenvalues of the arrowhead matrix built from the
    restricted spectrum nu (length p-1) and the perturbation column.
    """

    nu: Spectrum
    e_diag: float
    e_off: np.ndarray
    lower_bound: Optional[float] = None

    def __post_init__(self):
        off = np.asarray(self.e_off, dtype=float)
        off.flags.writeable = False
        object.__setattr__(self, "e_off", off)
        if off.size != self.nu.p:
            raise SizeMismatchError("e_off must align with nu")
        if not np.all(np.isfinite(off)) or not np.isfinite(self.e_diag):
            raise ValueError("non-finite perturbation entries")

    @classmethod
    def from_column(cls, col: PerturbationColumn) -> "SecularProblem":
        return cls(nu=col.nu, e_diag=col.diag_entry, e_off=col.off_entries)

    @property
    def scale(self) -> float:
        parts = [abs(self.e_diag)]
        if self.nu.p:
            parts.append(self.nu[0])
            parts.append(float(np.max(np.abs(self.e_off))))
        return max(max(parts), np.finfo(float).tiny)

    def to_json(self) -> str:
        return json.dumps(
            {
                "nu": list(self.nu.values),
                "e_diag": self.e_diag,
                "e_off": list(self.e_off),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SecularProblem":
        rec = json.loads(text)
        nu = Spectrum(np.asarray(rec["nu"], dtype=float), SpectrumRole.RESTRICTED)
        return cls(nu=nu, e_diag=float(rec["e_diag"]), e_off=np.asarray(rec["e_off"]))


def secular_function(y: float, prob: SecularProblem) -> float:
    """Evaluate f(y); strictly decreasing between consecutive poles."""
    nu = prob.nu.values
    w2 = prob.e_off**2
    diff = nu - y
    live = w2 > 0
    if np.any(live & (np.abs(diff) < DEFLATE_REL * np.maximum(np.abs(nu), prob.scale))):
        raise PoleHitError(f"evaluation point {y} hits a pole")
    total = np.sum(w2[live] / diff[live]) if np.any(live) else 0.0
    return float(prob.e_diag - total - y)


def arrowhead_oracle(prob: SecularProblem) -> np.ndarray:
    """Assemble the p x p arrowhead matrix whose eigenvalues solve the
    secular equation (arrow row/column placed last)."""
    m = prob.nu.p + 1
    a = np.zeros((m, m))
    a[np.arange(m - 1), np.arange(m - 1)] = prob.nu.values
    a[-1, -1] = prob.e_diag
    a[-1, :-1] = prob.e_off
    a[:-1, -1] = prob.e_off
    return a


def _solve_bracket(lo: float, hi: float, nu: np.ndarray, w2: np.ndarray,
                   d: float, scale: float) -> float:
    """One root of f on (lo, hi).

    f is strictly decreasing on the open interval, positive near lo and
    negative near hi (analytically guaranteed by the bracket layout), so the
    endpoints are never evaluated: safeguarded bisection keeps the sign
    invariant while Newton steps accelerate from the inside.
    """
    if not lo < hi:
        raise BracketFailureError(f"degenerate bracket ({lo}, {hi})")

    def f_and_fp(y):
        diff = nu - y
        if np.any(diff == 0.0):
            return np.inf, -np.inf
        t = w2 / diff
        return d - float(np.sum(t)) - y, -float(np.sum(t / diff)) - 1.0

    a, b = lo, hi
    y = 0.5 * (a + b)
    for _ in range(MAX_ROOT_ITER):
        fy, fpy = f_and_fp(y)
        if not np.isfinite(fy):
            y = np.nextafter(y, b)
            continue
        if fy > 0:
            a = y
        else:
            b = y
        width = b - a
        if width <= max(1e-14 * scale, 4 * np.spacing(max(abs(a), abs(b)))):
            break
        cand = y - fy / fpy if fpy != 0 and np.isfinite(fpy) else 0.5 * (a + b)
        y = cand if a < cand < b else 0.5 * (a + b)
    else:
        raise NoConvergenceError(f"root search stalled on ({lo}, {hi})")
    return 0.5 * (a + b)


def secular_solve(prob: SecularProblem) -> Spectrum:
    """All p eigenvalues of the arrowhead problem, descending.

    Tiny off-entries and exactly tied nu values are deflated: a pole with
    zero projected weight is itself an eigenvalue.
    """
    nu = prob.nu.values
    w = prob.e_off.astype(float).copy()
    d = prob.e_diag
    scale = prob.scale
    m = nu.size

    if m == 0:
        return _as_spectrum(np.array([d]))

    w[np.abs(w) < DEFLATE_REL * scale] = 0.0

    # merge exactly tied pole locations: rotate tied weights into one slot
    deflated = []
    act_nu, act_w2 = [], []
    k = 0
    while k < m:
        j = k
        while j + 1 < m and nu[j + 1] == nu[k]:
            j += 1
        group_w2 = float(np.sum(w[k:j + 1] ** 2))
        n_tied = j - k
        deflated.extend([nu[k]] * n_tied)
        if group_w2 > 0:
            act_nu.append(nu[k])
            act_w2.append(group_w2)
        else:
            deflated.append(nu[k])
        k = j + 1

    act_nu = np.asarray(act_nu)
    act_w2 = np.asarray(act_w2)
    roots = list(deflated)

    if act_nu.size == 0:
        roots.append(d)
        return _as_spectrum(np.asarray(roots))

    sum_w = float(np.sum(np.sqrt(act_w2)))
    upper = max(act_nu[0], d) + sum_w + scale * 1e-12
    if prob.lower_bound is not None:
        lower = prob.lower_bound
    else:
        lower = min(act_nu[-1], d) - sum_w - scale * 1e-12

    brackets = [(act_nu[0], upper)]
    for s in range(1, act_nu.size):
        brackets.append((act_nu[s], act_nu[s - 1]))
    brackets.append((lower, act_nu[-1]))

    for lo, hi in brackets:
        roots.append(_solve_bracket(lo, hi, act_nu, act_w2, d, scale))

    return _as_spectrum(np.asarray(roots))


def _as_spectrum(vals: np.ndarray) -> Spectrum:
    return sort_spectrum(vals, SpectrumRole.SAMPLE)


def interlacing_check(full: Spectrum, restricted: Spectrum) -> bool:
    """Non-strict Cauchy interlacing of a spectrum and its one-smaller
    restriction (ties tolerated at 1e-12 relative)."""
    return interlaces(full, restricted)


@dataclass(frozen=True)
class LocalityProfile:
    """Per-index movement ratios of the full spectrum relative to the
    restricted one, and the implied insertion location."""

    ratios: np.ndarray
    insertion_index: int

    def fraction_below(self, l: float, exclude_near: Optional[tuple] = None) -> float:
        """Fraction of indices with ratio < 1/l; optionally ignore indices
        within exclude_near = (center, radius)."""
        idx = np.arange(self.ratios.size)
        keep = np.ones_like(idx, dtype=bool)
        if exclude_near is not None:
            center, radius = exclude_near
            keep = np.abs(idx - center) > radius
        if not np.any(keep):
            return 1.0
        return float(np.mean(self.ratios[keep] < 1.0 / l))


def locality_profile(full: Spectrum, restricted: Spectrum, i: int) -> LocalityProfile:
    """How far each full eigenvalue moved inside its interlacing interval.

    Interior index j uses min distance to its two bracketing restricted
    values over the bracket length; the two boundary indices fall back to
    the adjacent restricted gap.
    """
    if full.p != restricted.p + 1:
        raise SizeMismatchError("restricted spectrum must be one shorter")
    if not interlaces(full, restricted):
        raise InterlacingViolationError("spectra do not interlace")
    p = full.p
    f = full.values
    r = restricted.values
    ratios = np.empty(p)
    for j in range(p):
        if j == 0:
            num = abs(f[0] - r[0])
            den = r[0] - r[1] if p > 2 else max(num, np.finfo(float).tiny)
        elif j == p - 1:
            num = abs(f[j] - r[j - 1])
            den = r[j - 2] - r[j - 1] if p > 2 else max(num, np.finfo(float).tiny)
        else:
            num = min(abs(f[j] - r[j]), abs(f[j] - r[j - 1]))
            den = r[j - 1] - r[j]
        ratios[j] = num / den if den > 0 else 0.0
    return LocalityProfile(ratios=ratios, insertion_index=int(np.argmax(ratios)))
